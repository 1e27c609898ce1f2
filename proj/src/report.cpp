#include <seqsel/report.hpp>

#include <seqsel/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace seqsel {

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

nlohmann::ordered_json position_list(const std::vector<int>& positions, const SequenceDataset& data)
{
    auto arr = nlohmann::ordered_json::array();
    for (int j : positions) {
        arr.push_back({{"index", j}, {"name", data.position_names().at(static_cast<std::size_t>(j))}});
    }
    return arr;
}

// Non-finite values have no JSON spelling; they are written as null.
nlohmann::ordered_json number(double v)
{
    if (!std::isfinite(v)) {
        return nullptr;
    }
    return v;
}

} // namespace

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

nlohmann::ordered_json report_to_json(const SelectionReport& report, const SequenceDataset& data)
{
    nlohmann::ordered_json j;
    j["schema"] = kReportSchema;
    j["method"] = report.method;
    auto tuning = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.tuning) {
        tuning[k] = number(v);
    }
    j["tuning"] = tuning;
    auto meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.metadata) {
        meta[k] = v;
    }
    j["metadata"] = meta;
    j["n_positions"] = report.n_positions;
    j["positions"] = position_list(report.selected.positions, data);
    if (report.selected.per_class && data.outcome()) {
        auto per = nlohmann::ordered_json::object();
        const auto& labels = data.outcome()->labels;
        for (std::size_t m = 0; m < report.selected.per_class->size() && m < labels.size(); ++m) {
            auto names = nlohmann::ordered_json::array();
            for (int p : (*report.selected.per_class)[m]) {
                names.push_back(data.position_names().at(static_cast<std::size_t>(p)));
            }
            per[labels[m]] = names;
        }
        j["per_class"] = per;
    }
    j["metrics"] = {{"cv_misclassification", number(report.cv_misclassification)},
                    {"cv_standard_error", number(report.cv_standard_error)}};
    auto history = nlohmann::ordered_json::array();
    for (const auto& h : report.history) {
        nlohmann::ordered_json row{{"step", h.step}};
        row["n_positions"] = h.n_positions >= 0 ? nlohmann::ordered_json(h.n_positions) : nullptr;
        row["misclassification"] = h.misclassification >= 0 ? number(h.misclassification) : nullptr;
        history.push_back(row);
    }
    j["history"] = history;
    j["curve"] = report.curve_name;
    return j;
}

std::string format_curve_csv(const SelectionReport& report)
{
    std::ostringstream out;
    out << (report.curve_name.empty() ? "tuning" : report.curve_name)
        << ",pre_refit_positions,n_positions,misclassification,valid,note\n";
    for (const auto& pt : report.curve) {
        out << format_number(pt.tuning) << ',';
        if (pt.pre_refit_positions >= 0) {
            out << pt.pre_refit_positions;
        }
        out << ',';
        if (pt.valid) {
            out << pt.n_positions << ',' << format_number(pt.misclassification);
        } else {
            out << ',';
        }
        out << ',' << (pt.valid ? 1 : 0) << ',' << csv_field(pt.note) << '\n';
    }
    return out.str();
}

std::string format_path_csv(const std::vector<PathRow>& rows)
{
    std::ostringstream out;
    out << "lambda,n_positions,misclassification\n";
    for (const auto& r : rows) {
        out << format_number(r.lambda) << ',' << r.n_positions << ',' << format_number(r.misclassification) << '\n';
    }
    return out.str();
}

std::string format_importance_csv(const ImportanceVector& importance, const DesignMatrix& X, const SequenceDataset& data)
{
    if (static_cast<int>(importance.values.size()) != X.cols()) {
        throw ValidationError("importance length does not match design width");
    }
    std::ostringstream out;
    out << "position,state,importance\n";
    for (int c = 0; c < X.cols(); ++c) {
        const auto& key = X.columns()[static_cast<std::size_t>(c)];
        out << csv_field(data.position_names().at(static_cast<std::size_t>(key.position))) << ','
            << csv_field(data.alphabet().label(key.state)) << ','
            << format_number(importance.values[static_cast<std::size_t>(c)]) << '\n';
    }
    return out.str();
}

ReportRow parse_report(const std::string& text, const std::string& source)
{
    // ordered, so tuning keys keep the order they were written in
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source + ": not valid JSON (" + e.what() + ")");
    }
    auto fail = [&](const std::string& why) -> FormatError { return FormatError(source + ": " + why); };
    if (!j.is_object()) {
        throw fail("report must be a JSON object");
    }
    if (!j.contains("schema") || !j["schema"].is_number_integer()) {
        throw fail("missing schema version");
    }
    if (j["schema"].get<int>() != kReportSchema) {
        throw fail("unsupported schema version " + j["schema"].dump());
    }
    ReportRow row;
    row.source = source;
    try {
        row.method = j.at("method").get<std::string>();
        row.n_positions = j.at("n_positions").get<int>();
        const auto& mis = j.at("metrics").at("cv_misclassification");
        row.misclassification = mis.is_null() ? std::nan("") : mis.get<double>();
        const auto& tuning = j.at("tuning");
        if (!tuning.is_object()) {
            throw fail("tuning must be an object");
        }
        for (const auto& [k, v] : tuning.items()) {
            row.tuning.emplace_back(k, v.is_null() ? std::nan("") : v.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw fail(std::string("malformed report (") + e.what() + ")");
    }
    return row;
}

ReportRow load_report(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(path.string() + ": cannot open report");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_report(text.str(), path.string());
}

std::string format_report_table(const std::vector<ReportRow>& rows)
{
    std::ostringstream out;
    out << "method,tuning,n_positions,misclassification,source\n";
    for (const auto& r : rows) {
        std::string tuning;
        for (const auto& [k, v] : r.tuning) {
            if (!tuning.empty()) {
                tuning += ';';
            }
            tuning += k + '=' + format_number(v);
        }
        out << csv_field(r.method) << ',' << csv_field(tuning) << ',' << r.n_positions << ','
            << format_number(r.misclassification) << ',' << csv_field(r.source) << '\n';
    }
    return out.str();
}

} // namespace seqsel
