#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <seqsel/penreg.hpp>
#include <seqsel/seqdata.hpp>

namespace seqsel {

/// Selected positions, optionally broken down per outcome class.
struct PositionSet
{
    std::vector<int> positions; // sorted, unique
    std::optional<std::vector<std::vector<int>>> per_class;

    int size() const { return static_cast<int>(positions.size()); }
    bool contains(int position) const;
};

/// Positions owning a coefficient with |beta_mjk| >= t0, per class and in
/// union. t0 = 0 means "nonzero", i.e. |beta| > 1e-12.
PositionSet active_positions(const CoefficientTensor& coef, const DesignMatrix& X, double t0);

/// Shared tuning for every LASSO-based selection procedure.
struct SelectionSettings
{
    int lambda_count = 100;
    double lambda_ratio = 1e-4;
    CvOptions cv; // cv.seed drives every fold assignment
};

/// One cross-validated evaluation of a (possibly restricted) design.
struct RestrictedFit
{
    PositionSet positions;         // positions the design was restricted to
    double misclassification = 0.0; // 1 - best mean CV accuracy
    double standard_error = 0.0;    // of the fold errors at the chosen lambda
    double lambda = 0.0;            // chosen lambda; 0 for intercept-only
    CoefficientTensor coef;         // refit on all rows, restricted columns
    DesignMatrix design;            // the restricted design
};

/// CV-tuned fit on the columns of `positions`. With no positions the model is
/// intercept-only and each fold predicts its training majority class.
RestrictedFit fit_restricted(const DesignMatrix& X,
                             std::span<const int> y,
                             int num_classes,
                             std::span<const int> positions,
                             const PenaltySpec& penalty,
                             const SelectionSettings& settings,
                             std::uint64_t fold_seed);

struct HistoryRecord
{
    int step = 0;
    int n_positions = 0;
    double misclassification = -1.0; // negative when not evaluated
};

/// Plot-ready point: a tuning value and the selection it produced.
struct CurvePoint
{
    double tuning = 0.0;
    int pre_refit_positions = -1; // survivors before a refit, when meaningful
    int n_positions = 0;
    double misclassification = 0.0;
    bool valid = true;
    std::string note;
};

struct SelectionReport
{
    std::string method;
    std::vector<std::pair<std::string, double>> tuning;
    std::vector<std::pair<std::string, std::string>> metadata;
    PositionSet selected;
    int n_positions = 0;
    double cv_misclassification = 0.0;
    double cv_standard_error = 0.0;
    std::vector<HistoryRecord> history;
    std::string curve_name; // "threshold", "lambda", "importance", ...
    std::vector<CurvePoint> curve;

    std::optional<double> tuning_value(std::string_view key) const;
};

/// Step 1 of the thresholded LASSO: CV-tuned L1 fit on the full design.
CVResult lasso_step(const DesignMatrix& X, std::span<const int> y, int num_classes, const SelectionSettings& settings);

/// Plain LASSO selection: nonzero positions of the CV-optimal fit, scored by a
/// fresh CV on the restricted design.
SelectionReport lasso_selection(const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const SelectionSettings& settings);
SelectionReport lasso_selection(const CVResult& step1,
                                const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const SelectionSettings& settings);

/// Hard-threshold the step-1 coefficients at t0, then CV-tune a LASSO refit on
/// the survivors' columns and keep its nonzero positions.
/// Throws ValidationError if nothing survives t0.
SelectionReport thresholded_lasso(const CVResult& step1,
                                  const DesignMatrix& X,
                                  std::span<const int> y,
                                  int num_classes,
                                  double t0,
                                  const SelectionSettings& settings);
SelectionReport thresholded_lasso(const DesignMatrix& X,
                                  std::span<const int> y,
                                  int num_classes,
                                  double t0,
                                  const SelectionSettings& settings);

/// 40 log-spaced values between the 1st and 99th percentile of nonzero |beta|.
std::vector<double> auto_threshold_grid(const CoefficientTensor& coef, int count = 40);

struct SweepRow
{
    double threshold = 0.0;
    int survivors = 0; // positions surviving the hard threshold, before refit
    std::optional<SelectionReport> report;
    std::string error;
};

struct ThresholdSweep
{
    CVResult step1;
    std::vector<SweepRow> rows;
    std::optional<std::size_t> elbow;
};

/// One thresholded-LASSO evaluation per grid value, sharing the step-1 fit.
/// An empty survivor set marks the row instead of failing the sweep.
ThresholdSweep threshold_sweep(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               std::vector<double> grid,
                               const SelectionSettings& settings);
ThresholdSweep threshold_sweep(CVResult step1,
                               const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               std::vector<double> grid,
                               const SelectionSettings& settings);

/// Index of the row with the fewest final positions among rows whose CV
/// misclassification is within one standard error of the best row.
std::optional<std::size_t> sweep_elbow(const std::vector<SweepRow>& rows);

/// Thresholded-LASSO report at the sweep elbow, with the sweep as its curve.
SelectionReport sweep_report(const ThresholdSweep& sweep);

/// Refit on the surviving positions until the set is unchanged for `window`
/// consecutive runs or `max_rounds` runs have been made.
SelectionReport repeated_lasso(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               int window,
                               int max_rounds,
                               const SelectionSettings& settings);

enum class PathMode
{
    active_set,     // positions of the fit at lambda that are nonzero
    threshold_fit   // positions of the CV-optimal fit with |beta| >= lambda
};

struct PathRow
{
    double lambda = 0.0;
    int n_positions = 0;
    double misclassification = 0.0;
};

/// Positions and CV misclassification at each lambda.
std::vector<PathRow> lambda_path_table(const DesignMatrix& X,
                                       std::span<const int> y,
                                       int num_classes,
                                       const std::vector<double>& lambdas,
                                       const SelectionSettings& settings,
                                       PathMode mode = PathMode::active_set);

/// Group or sparse-group selection along its own lambda path; the curve holds
/// (lambda, positions, CV misclassification) per grid point.
SelectionReport penalized_selection(const DesignMatrix& X,
                                    std::span<const int> y,
                                    int num_classes,
                                    const PenaltySpec& penalty,
                                    const SelectionSettings& settings);

} // namespace seqsel
