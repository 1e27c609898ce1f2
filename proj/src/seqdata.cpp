#include <seqsel/seqdata.hpp>

#include <seqsel/error.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace seqsel {

namespace {

bool parse_integer(std::string_view text, long long& value)
{
    if (text.empty()) {
        return false;
    }
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc{} && ptr == last;
}

// Splits one line into fields. Double-quoted fields may contain the delimiter;
// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_line(std::string_view line, char delimiter)
{
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text)
{
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        ++line_no;
        if (!line.empty()) {
            lines.emplace_back(line_no, line);
        }
        if (end == text.size()) {
            break;
        }
        start = end + 1;
    }
    return lines;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Resolves a column selector to a 0-based index, or -1 when absent.
int resolve_column(const std::string& selector,
                   const std::vector<std::string>& header,
                   bool has_header,
                   bool optional_when_missing,
                   const char* role)
{
    if (selector.empty()) {
        return -1;
    }
    if (has_header) {
        auto it = std::find(header.begin(), header.end(), selector);
        if (it != header.end()) {
            return static_cast<int>(it - header.begin());
        }
    }
    long long index = 0;
    if (parse_integer(selector, index)) {
        if (index < 1 || static_cast<std::size_t>(index) > header.size()) {
            throw FormatError(std::string(role) + " column index " + selector + " is out of range");
        }
        return static_cast<int>(index - 1);
    }
    if (optional_when_missing) {
        return -1;
    }
    throw FormatError(std::string(role) + " column '" + selector + "' not found in header");
}

std::string quote_if_needed(const std::string& field)
{
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace

std::vector<std::string> natural_sorted_unique(std::vector<std::string> labels)
{
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool all_integers = std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
        long long v = 0;
        return parse_integer(s, v);
    });
    if (all_integers) {
        std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
            long long va = 0;
            long long vb = 0;
            parse_integer(a, va);
            parse_integer(b, vb);
            return va < vb;
        });
    }
    return labels;
}

StateAlphabet::StateAlphabet(std::vector<std::string> labels) : labels_(std::move(labels))
{
    if (labels_.size() < 2) {
        throw ValidationError("state alphabet needs at least 2 labels, got " + std::to_string(labels_.size()));
    }
    for (std::size_t k = 0; k < labels_.size(); ++k) {
        if (labels_[k].empty()) {
            throw ValidationError("state alphabet contains an empty label");
        }
        if (!index_.emplace(labels_[k], static_cast<int>(k)).second) {
            throw ValidationError("duplicate state label '" + labels_[k] + "'");
        }
    }
}

StateAlphabet StateAlphabet::from_observed(std::vector<std::string> labels)
{
    return StateAlphabet(natural_sorted_unique(std::move(labels)));
}

std::optional<int> StateAlphabet::index_of(std::string_view label) const
{
    auto it = index_.find(std::string(label));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

SequenceDataset::SequenceDataset(std::vector<std::string> ids,
                                 std::vector<std::string> position_names,
                                 StateAlphabet alphabet,
                                 std::vector<StateIndex> states,
                                 std::optional<Outcome> outcome)
    : ids_(std::move(ids)),
      position_names_(std::move(position_names)),
      alphabet_(std::move(alphabet)),
      states_(std::move(states)),
      outcome_(std::move(outcome))
{
    if (ids_.empty()) {
        throw ValidationError("dataset has no sequences");
    }
    if (position_names_.empty()) {
        throw ValidationError("dataset has no positions");
    }
    if (alphabet_.size() < 2) {
        throw ValidationError("dataset alphabet must have at least 2 states");
    }
    if (states_.size() != ids_.size() * position_names_.size()) {
        throw ValidationError("state matrix size does not match n x p");
    }
    for (StateIndex s : states_) {
        if (s >= alphabet_.size()) {
            throw ValidationError("state index " + std::to_string(s) + " outside alphabet of size " +
                                  std::to_string(alphabet_.size()));
        }
    }
    if (outcome_) {
        const int m = outcome_->num_classes();
        if (outcome_->classes.size() != ids_.size()) {
            throw ValidationError("outcome length does not match number of sequences");
        }
        std::vector<int> counts(static_cast<std::size_t>(std::max(m, 0)), 0);
        for (int c : outcome_->classes) {
            if (c < 0 || c >= m) {
                throw ValidationError("outcome class index " + std::to_string(c) + " out of range");
            }
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < m; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                throw ValidationError("outcome class '" + outcome_->labels[static_cast<std::size_t>(c)] +
                                      "' has no members");
            }
        }
    }
}

SequenceDataset SequenceDataset::with_outcome(Outcome outcome) const
{
    return SequenceDataset(ids_, position_names_, alphabet_, states_, std::move(outcome));
}

StateAlphabet load_alphabet(const std::filesystem::path& path)
{
    std::vector<std::string> labels;
    const std::string text = read_file(path);
    for (const auto& [line_no, line] : split_lines(text)) {
        labels.emplace_back(line);
    }
    return StateAlphabet(std::move(labels));
}

SequenceDataset parse_sequences(std::string_view text, const TableFormat& format)
{
    const auto lines = split_lines(text);
    if (lines.empty()) {
        throw ValidationError("input table is empty");
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    rows.reserve(lines.size());
    for (const auto& [line_no, line] : lines) {
        rows.push_back(split_line(line, format.delimiter));
        line_numbers.push_back(line_no);
    }

    const std::size_t width = rows.front().size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw FormatError("row at line " + std::to_string(line_numbers[r]) + " has " +
                              std::to_string(rows[r].size()) + " fields, expected " + std::to_string(width));
        }
    }

    std::vector<std::string> header;
    if (format.header) {
        header = rows.front();
    } else {
        header.resize(width);
    }
    const bool default_outcome = format.outcome_column == TableFormat{}.outcome_column;
    const bool default_id = format.id_column == TableFormat{}.id_column;
    const int id_col = resolve_column(format.id_column, header, format.header, default_id, "id");
    const int outcome_col =
        resolve_column(format.outcome_column, header, format.header, default_outcome, "outcome");
    if (id_col >= 0 && id_col == outcome_col) {
        throw FormatError("id and outcome columns must differ");
    }

    std::vector<int> position_cols;
    std::vector<std::string> position_names;
    for (int c = 0; c < static_cast<int>(width); ++c) {
        if (c == id_col || c == outcome_col) {
            continue;
        }
        position_cols.push_back(c);
        position_names.push_back(format.header ? header[static_cast<std::size_t>(c)]
                                               : "pos" + std::to_string(position_cols.size()));
    }
    if (position_cols.empty()) {
        throw ValidationError("input table has no position columns");
    }

    const std::size_t first = format.header ? 1 : 0;
    const std::size_t n = rows.size() - first;
    if (n == 0) {
        throw ValidationError("input table has a header but no sequences");
    }
    const std::size_t p = position_cols.size();

    for (std::size_t r = first; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            if (rows[r][c].empty()) {
                throw ValidationError("missing value at line " + std::to_string(line_numbers[r]) + ", column " +
                                      std::to_string(c + 1));
            }
        }
    }

    StateAlphabet alphabet;
    if (format.alphabet) {
        alphabet = *format.alphabet;
    } else {
        std::set<std::string> seen;
        for (std::size_t r = first; r < rows.size(); ++r) {
            for (int c : position_cols) {
                seen.insert(rows[r][static_cast<std::size_t>(c)]);
            }
        }
        alphabet = StateAlphabet::from_observed({seen.begin(), seen.end()});
    }

    std::vector<StateIndex> states(n * p);
    std::vector<std::string> ids(n);
    for (std::size_t r = first; r < rows.size(); ++r) {
        const std::size_t i = r - first;
        ids[i] = id_col >= 0 ? rows[r][static_cast<std::size_t>(id_col)] : "seq" + std::to_string(i + 1);
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& label = rows[r][static_cast<std::size_t>(position_cols[j])];
            const auto index = alphabet.index_of(label);
            if (!index) {
                throw ValidationError("label '" + label + "' at line " + std::to_string(line_numbers[r]) +
                                      " is not in the state alphabet");
            }
            states[i * p + j] = static_cast<StateIndex>(*index);
        }
    }

    std::optional<Outcome> outcome;
    if (outcome_col >= 0) {
        std::vector<std::string> raw(n);
        for (std::size_t r = first; r < rows.size(); ++r) {
            raw[r - first] = rows[r][static_cast<std::size_t>(outcome_col)];
        }
        Outcome out;
        out.labels = natural_sorted_unique(raw);
        out.classes.reserve(n);
        for (const auto& label : raw) {
            auto it = std::find(out.labels.begin(), out.labels.end(), label);
            out.classes.push_back(static_cast<int>(it - out.labels.begin()));
        }
        outcome = std::move(out);
    }

    return SequenceDataset(std::move(ids), std::move(position_names), std::move(alphabet), std::move(states),
                           std::move(outcome));
}

SequenceDataset load_sequences(const std::filesystem::path& path, const TableFormat& format)
{
    return parse_sequences(read_file(path), format);
}

std::string format_sequences(const SequenceDataset& ds)
{
    std::string out = "id";
    for (const auto& name : ds.position_names()) {
        out += ',';
        out += quote_if_needed(name);
    }
    if (ds.outcome()) {
        out += ",outcome";
    }
    out += '\n';
    for (int i = 0; i < ds.n(); ++i) {
        out += quote_if_needed(ds.ids()[static_cast<std::size_t>(i)]);
        for (int j = 0; j < ds.p(); ++j) {
            out += ',';
            out += quote_if_needed(ds.alphabet().label(ds.state(i, j)));
        }
        if (ds.outcome()) {
            out += ',';
            out += quote_if_needed(
                ds.outcome()->labels[static_cast<std::size_t>(ds.outcome()->classes[static_cast<std::size_t>(i)])]);
        }
        out += '\n';
    }
    return out;
}

void write_sequences(const SequenceDataset& ds, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out << format_sequences(ds);
}

Outcome load_outcome_for(const SequenceDataset& ds, const std::filesystem::path& path)
{
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.size() < 2) {
        throw ValidationError("label file '" + path.string() + "' has no rows");
    }
    std::unordered_map<std::string, std::string> by_id;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_line(lines[r].second, ',');
        if (fields.size() != 2) {
            throw FormatError("label file row at line " + std::to_string(lines[r].first) +
                              " must have exactly 2 fields");
        }
        by_id[fields[0]] = fields[1];
    }
    std::vector<std::string> raw;
    raw.reserve(static_cast<std::size_t>(ds.n()));
    for (const auto& id : ds.ids()) {
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw ValidationError("label file has no entry for sequence '" + id + "'");
        }
        raw.push_back(it->second);
    }
    Outcome out;
    out.labels = natural_sorted_unique(raw);
    for (const auto& label : raw) {
        auto it = std::find(out.labels.begin(), out.labels.end(), label);
        out.classes.push_back(static_cast<int>(it - out.labels.begin()));
    }
    return out;
}

DesignMatrix::DesignMatrix(Sparse values,
                           std::vector<ColumnKey> columns,
                           std::vector<ColumnKey> dropped,
                           int num_positions,
                           int num_states)
    : values_(std::move(values)),
      columns_(std::move(columns)),
      dropped_(std::move(dropped)),
      num_positions_(num_positions),
      num_states_(num_states)
{
    if (static_cast<int>(columns_.size()) != values_.cols()) {
        throw ValidationError("design column metadata does not match matrix width");
    }
    if (!std::is_sorted(columns_.begin(), columns_.end())) {
        throw ValidationError("design columns must be position-major then state ordered");
    }
    values_.makeCompressed();
    build_groups();
}

void DesignMatrix::build_groups()
{
    groups_.clear();
    for (int c = 0; c < static_cast<int>(columns_.size()); ++c) {
        const int j = columns_[static_cast<std::size_t>(c)].position;
        if (groups_.empty() || groups_.back().position != j) {
            groups_.push_back({j, c, 0});
        }
        ++groups_.back().size;
    }
}

std::vector<int> DesignMatrix::group_sizes() const
{
    std::vector<int> sizes(static_cast<std::size_t>(num_positions_), 0);
    for (const auto& g : groups_) {
        sizes[static_cast<std::size_t>(g.position)] = g.size;
    }
    return sizes;
}

std::vector<int> DesignMatrix::positions() const
{
    std::vector<int> out;
    out.reserve(groups_.size());
    for (const auto& g : groups_) {
        out.push_back(g.position);
    }
    return out;
}

DesignMatrix DesignMatrix::restrict_to_positions(std::span<const int> positions) const
{
    std::vector<char> keep_position(static_cast<std::size_t>(num_positions_), 0);
    for (int j : positions) {
        if (j < 0 || j >= num_positions_) {
            throw ValidationError("position " + std::to_string(j) + " out of range");
        }
        keep_position[static_cast<std::size_t>(j)] = 1;
    }
    std::vector<int> new_index(columns_.size(), -1);
    std::vector<ColumnKey> columns;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        if (keep_position[static_cast<std::size_t>(columns_[c].position)]) {
            new_index[c] = static_cast<int>(columns.size());
            columns.push_back(columns_[c]);
        }
    }
    std::vector<Eigen::Triplet<double, int>> triplets;
    for (int i = 0; i < rows(); ++i) {
        for (Sparse::InnerIterator it(values_, i); it; ++it) {
            const int c = new_index[static_cast<std::size_t>(it.col())];
            if (c >= 0) {
                triplets.emplace_back(i, c, it.value());
            }
        }
    }
    Sparse values(rows(), static_cast<int>(columns.size()));
    values.setFromTriplets(triplets.begin(), triplets.end());
    return DesignMatrix(std::move(values), std::move(columns), dropped_, num_positions_, num_states_);
}

DesignMatrix DesignMatrix::select_rows(std::span<const int> rows) const
{
    Sparse values(static_cast<int>(rows.size()), cols());
    std::vector<int> nnz(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        nnz[r] = static_cast<int>(values_.outerIndexPtr()[rows[r] + 1] - values_.outerIndexPtr()[rows[r]]);
    }
    values.reserve(nnz);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (Sparse::InnerIterator it(values_, rows[r]); it; ++it) {
            values.insert(static_cast<int>(r), it.col()) = it.value();
        }
    }
    return DesignMatrix(std::move(values), columns_, dropped_, num_positions_, num_states_);
}

std::vector<int> DesignMatrix::decode_row(int i) const
{
    std::vector<int> out(static_cast<std::size_t>(num_positions_), -1);
    std::vector<double> best(static_cast<std::size_t>(num_positions_), 0.0);
    for (Sparse::InnerIterator it(values_, i); it; ++it) {
        const auto& key = columns_[static_cast<std::size_t>(it.col())];
        if (it.value() > best[static_cast<std::size_t>(key.position)]) {
            best[static_cast<std::size_t>(key.position)] = it.value();
            out[static_cast<std::size_t>(key.position)] = key.state;
        }
    }
    return out;
}

DesignMatrix encode_one_hot(const SequenceDataset& ds, bool drop_unobserved)
{
    const int n = ds.n();
    const int p = ds.p();
    const int q = ds.q();

    std::vector<char> observed(static_cast<std::size_t>(p) * q, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            observed[static_cast<std::size_t>(j) * q + ds.state(i, j)] = 1;
        }
    }

    std::vector<int> column_of(static_cast<std::size_t>(p) * q, -1);
    std::vector<ColumnKey> columns;
    std::vector<ColumnKey> dropped;
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < q; ++k) {
            const std::size_t cell = static_cast<std::size_t>(j) * q + k;
            if (drop_unobserved && !observed[cell]) {
                dropped.push_back({j, k});
            } else {
                column_of[cell] = static_cast<int>(columns.size());
                columns.push_back({j, k});
            }
        }
    }

    DesignMatrix::Sparse values(n, static_cast<int>(columns.size()));
    values.reserve(Eigen::VectorXi::Constant(n, p));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            const int c = column_of[static_cast<std::size_t>(j) * q + ds.state(i, j)];
            if (c >= 0) {
                values.insert(i, c) = 1.0;
            }
        }
    }
    return DesignMatrix(std::move(values), std::move(columns), std::move(dropped), p, q);
}

} // namespace seqsel
