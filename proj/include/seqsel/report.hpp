#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <seqsel/forest.hpp>
#include <seqsel/select.hpp>
#include <seqsel/seqdata.hpp>

namespace seqsel {

inline constexpr int kReportSchema = 1;

/// JSON form of a selection report; positions carry their original labels.
nlohmann::ordered_json report_to_json(const SelectionReport& report, const SequenceDataset& data);

/// CSV of the report's curve: `<curve>,pre_refit_positions,n_positions,misclassification,valid,note`.
std::string format_curve_csv(const SelectionReport& report);

/// CSV `lambda,n_positions,misclassification`.
std::string format_path_csv(const std::vector<PathRow>& rows);

/// CSV `position,state,importance`.
std::string format_importance_csv(const ImportanceVector& importance, const DesignMatrix& X, const SequenceDataset& data);

/// One line of the combined comparison table.
struct ReportRow
{
    std::string method;
    std::vector<std::pair<std::string, double>> tuning;
    int n_positions = 0;
    double misclassification = 0.0;
    std::string source;
};

/// Reads the summary of a report written by report_to_json. Throws
/// FormatError naming `source` on malformed input.
ReportRow parse_report(const std::string& text, const std::string& source);
ReportRow load_report(const std::filesystem::path& path);

/// CSV `method,tuning,n_positions,misclassification,source`; tuning is
/// `key=value` pairs joined by `;`.
std::string format_report_table(const std::vector<ReportRow>& rows);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

} // namespace seqsel
