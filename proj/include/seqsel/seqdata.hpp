#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace seqsel {

using StateIndex = std::uint16_t;

/// Ordered set of q >= 2 distinct state names. A label's index never changes.
class StateAlphabet
{
public:
    StateAlphabet() = default;
    explicit StateAlphabet(std::vector<std::string> labels);

    /// Sorted set of the given labels: numeric order when every label is an
    /// integer, lexicographic otherwise.
    static StateAlphabet from_observed(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::string& label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
    std::optional<int> index_of(std::string_view label) const;

    bool operator==(const StateAlphabet& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

/// Sequence-level class labels, 0-based, with their original text.
struct Outcome
{
    std::vector<int> classes;
    std::vector<std::string> labels;

    int num_classes() const { return static_cast<int>(labels.size()); }
};

/// n sequences of equal length p over a q-state alphabet, optionally labelled.
class SequenceDataset
{
public:
    SequenceDataset(std::vector<std::string> ids,
                    std::vector<std::string> position_names,
                    StateAlphabet alphabet,
                    std::vector<StateIndex> states,
                    std::optional<Outcome> outcome = std::nullopt);

    int n() const { return static_cast<int>(ids_.size()); }
    int p() const { return static_cast<int>(position_names_.size()); }
    int q() const { return alphabet_.size(); }

    StateIndex state(int i, int j) const { return states_[static_cast<std::size_t>(i) * p() + j]; }
    std::span<const StateIndex> row(int i) const
    {
        return {states_.data() + static_cast<std::size_t>(i) * p(), static_cast<std::size_t>(p())};
    }

    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<std::string>& position_names() const { return position_names_; }
    const StateAlphabet& alphabet() const { return alphabet_; }
    const std::vector<StateIndex>& states() const { return states_; }
    const std::optional<Outcome>& outcome() const { return outcome_; }

    /// Copy with the outcome replaced.
    SequenceDataset with_outcome(Outcome outcome) const;

private:
    std::vector<std::string> ids_;
    std::vector<std::string> position_names_;
    StateAlphabet alphabet_;
    std::vector<StateIndex> states_;
    std::optional<Outcome> outcome_;
};

/// How a wide table is laid out on disk.
struct TableFormat
{
    bool header = true;
    char delimiter = ',';
    /// Column holding sequence ids: a header name, or a 1-based index when
    /// there is no header. Empty means "no id column" (ids are generated).
    std::string id_column = "id";
    /// Column holding the outcome label. Empty means no outcome. The default
    /// name is optional: when the header lacks it the dataset is unlabelled.
    std::string outcome_column = "outcome";
    /// Fixes label order and rejects unknown labels when present.
    std::optional<StateAlphabet> alphabet;
};

/// Reads one label per line, skipping blank lines.
StateAlphabet load_alphabet(const std::filesystem::path& path);

SequenceDataset load_sequences(const std::filesystem::path& path, const TableFormat& format = {});
SequenceDataset parse_sequences(std::string_view text, const TableFormat& format = {});

/// Writes the canonical `id,<positions...>[,outcome]` table.
void write_sequences(const SequenceDataset& ds, const std::filesystem::path& path);
std::string format_sequences(const SequenceDataset& ds);

/// Reads an `id,label` table and aligns it with the dataset's ids.
Outcome load_outcome_for(const SequenceDataset& ds, const std::filesystem::path& path);

/// One design column: state k observed at position j.
struct ColumnKey
{
    int position = 0;
    int state = 0;

    auto operator<=>(const ColumnKey&) const = default;
};

/// Contiguous run of design columns belonging to one position.
struct PositionGroup
{
    int position = 0;
    int begin = 0;
    int size = 0;
};

/// Binary one-hot design, position-major then state index.
class DesignMatrix
{
public:
    using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

    DesignMatrix() = default;
    DesignMatrix(Sparse values,
                 std::vector<ColumnKey> columns,
                 std::vector<ColumnKey> dropped,
                 int num_positions,
                 int num_states);

    int rows() const { return static_cast<int>(values_.rows()); }
    int cols() const { return static_cast<int>(values_.cols()); }
    int num_positions() const { return num_positions_; }
    int num_states() const { return num_states_; }

    const Sparse& values() const { return values_; }
    const std::vector<ColumnKey>& columns() const { return columns_; }
    const std::vector<ColumnKey>& dropped() const { return dropped_; }
    const std::vector<PositionGroup>& groups() const { return groups_; }

    /// s_j for every position 0..p-1; zero for positions absent from this design.
    std::vector<int> group_sizes() const;

    /// Positions that own at least one column, ascending.
    std::vector<int> positions() const;

    /// Keeps only the columns of the listed positions.
    DesignMatrix restrict_to_positions(std::span<const int> positions) const;

    /// Keeps only the listed rows, in the order given.
    DesignMatrix select_rows(std::span<const int> rows) const;

    /// State per position recovered from row i (argmax within each group);
    /// -1 where the row has no retained column for that position.
    std::vector<int> decode_row(int i) const;

private:
    void build_groups();

    Sparse values_;
    std::vector<ColumnKey> columns_;
    std::vector<ColumnKey> dropped_;
    std::vector<PositionGroup> groups_;
    int num_positions_ = 0;
    int num_states_ = 0;
};

/// Dummy encoding of every (position, state) pair. With drop_unobserved,
/// all-zero columns are removed and listed in `dropped()`.
DesignMatrix encode_one_hot(const SequenceDataset& ds, bool drop_unobserved = true);

/// Sorts labels numerically when all are integers, lexicographically otherwise.
std::vector<std::string> natural_sorted_unique(std::vector<std::string> labels);

} // namespace seqsel
