#include <seqsel/select.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>
#include <seqsel/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace seqsel {

namespace {

constexpr double kNonzero = 1e-12;

// Fold-seed streams; every CV in a report draws from the user seed.
constexpr std::uint64_t kRefitStream = 1;
constexpr std::uint64_t kScoreStream = 2;
constexpr std::uint64_t kRoundStream = 1000;

std::string format_double(double v)
{
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

double fold_standard_error(const Eigen::MatrixXd& fold_accuracy, int column)
{
    const Eigen::VectorXd err = 1.0 - fold_accuracy.col(column).array();
    const auto k = err.size();
    if (k < 2) {
        return 0.0;
    }
    const double mean = err.mean();
    const double var = (err.array() - mean).square().sum() / static_cast<double>(k - 1);
    return std::sqrt(var / static_cast<double>(k));
}

// Intercept-only CV: each fold predicts the training-majority class.
std::pair<double, double> majority_cv(std::span<const int> y, int num_classes, const CvOptions& cv, std::uint64_t seed)
{
    const auto fold = stratified_folds(y, num_classes, cv.folds, seed);
    Eigen::MatrixXd acc(cv.folds, 1);
    for (int f = 0; f < cv.folds; ++f) {
        std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fold[i] != f) {
                ++counts[static_cast<std::size_t>(y[i])];
            }
        }
        const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        int right = 0;
        int total = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (fold[i] == f) {
                ++total;
                right += y[i] == majority;
            }
        }
        acc(f, 0) = static_cast<double>(right) / total;
    }
    return {1.0 - acc.col(0).mean(), fold_standard_error(acc, 0)};
}

} // namespace

bool PositionSet::contains(int position) const
{
    return std::binary_search(positions.begin(), positions.end(), position);
}

std::optional<double> SelectionReport::tuning_value(std::string_view key) const
{
    for (const auto& [k, v] : tuning) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

PositionSet active_positions(const CoefficientTensor& coef, const DesignMatrix& X, double t0)
{
    if (t0 < 0.0) {
        throw ValidationError("threshold must be nonnegative");
    }
    if (coef.num_columns() != X.cols()) {
        throw ValidationError("coefficient width does not match design width");
    }
    const double cutoff = t0 > 0.0 ? t0 : kNonzero;
    const bool strict = t0 == 0.0;
    PositionSet out;
    out.per_class.emplace(static_cast<std::size_t>(coef.num_classes()));
    std::vector<char> any(static_cast<std::size_t>(X.num_positions()), 0);
    for (int m = 0; m < coef.num_classes(); ++m) {
        auto& set = (*out.per_class)[static_cast<std::size_t>(m)];
        for (const auto& g : X.groups()) {
            for (int c = g.begin; c < g.begin + g.size; ++c) {
                const double a = std::abs(coef.beta(m, c));
                if (strict ? a > cutoff : a >= cutoff) {
                    set.push_back(g.position);
                    any[static_cast<std::size_t>(g.position)] = 1;
                    break;
                }
            }
        }
    }
    for (int j = 0; j < X.num_positions(); ++j) {
        if (any[static_cast<std::size_t>(j)]) {
            out.positions.push_back(j);
        }
    }
    return out;
}

RestrictedFit fit_restricted(const DesignMatrix& X,
                             std::span<const int> y,
                             int num_classes,
                             std::span<const int> positions,
                             const PenaltySpec& penalty,
                             const SelectionSettings& settings,
                             std::uint64_t fold_seed)
{
    RestrictedFit out;
    out.positions.positions.assign(positions.begin(), positions.end());
    std::sort(out.positions.positions.begin(), out.positions.positions.end());
    out.design = X.restrict_to_positions(out.positions.positions);

    CvOptions cv = settings.cv;
    cv.seed = fold_seed;
    if (out.design.cols() == 0) {
        auto [mis, se] = majority_cv(y, num_classes, cv, fold_seed);
        out.misclassification = mis;
        out.standard_error = se;
        out.coef = CoefficientTensor::zeros(num_classes, 0);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes);
        for (int c : y) {
            counts(c) += 1.0;
        }
        out.coef.intercepts = (counts / static_cast<double>(y.size())).array().log();
        return out;
    }

    const PenaltySpec bound = penalty.rebind(out.design);
    const auto grid = lambda_grid(out.design, y, num_classes, bound, settings.lambda_count, settings.lambda_ratio);
    CVResult result = cross_validate(out.design, y, num_classes, bound, grid, cv);
    out.misclassification = 1.0 - result.best_accuracy();
    out.standard_error = fold_standard_error(result.fold_accuracy, result.best_index);
    out.lambda = result.best_lambda;
    out.coef = std::move(result.refit.coef);
    return out;
}

CVResult lasso_step(const DesignMatrix& X, std::span<const int> y, int num_classes, const SelectionSettings& settings)
{
    const PenaltySpec penalty = PenaltySpec::lasso();
    const auto grid = lambda_grid(X, y, num_classes, penalty, settings.lambda_count, settings.lambda_ratio);
    return cross_validate(X, y, num_classes, penalty, grid, settings.cv);
}

SelectionReport lasso_selection(const CVResult& step1,
                                const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const SelectionSettings& settings)
{
    SelectionReport report;
    report.method = "lasso";
    report.selected = active_positions(step1.refit.coef, X, 0.0);
    report.n_positions = report.selected.size();
    const auto scored = fit_restricted(X, y, num_classes, report.selected.positions, PenaltySpec::lasso(), settings,
                                       derive_seed(settings.cv.seed, kScoreStream));
    report.cv_misclassification = scored.misclassification;
    report.cv_standard_error = scored.standard_error;
    report.tuning = {{"lambda", step1.best_lambda},
                     {"step1_cv_misclassification", 1.0 - step1.best_accuracy()},
                     {"folds", settings.cv.folds}};

    report.curve_name = "lambda";
    for (std::size_t k = 0; k < step1.path.size(); ++k) {
        CurvePoint point;
        point.tuning = step1.lambdas[k];
        point.n_positions = active_positions(step1.path[k].coef, X, 0.0).size();
        point.misclassification = 1.0 - step1.mean_accuracy[k];
        report.curve.push_back(point);
    }
    report.metadata.emplace_back("misclassification", "fresh stratified CV on the selected positions");
    return report;
}

SelectionReport lasso_selection(const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const SelectionSettings& settings)
{
    return lasso_selection(lasso_step(X, y, num_classes, settings), X, y, num_classes, settings);
}

SelectionReport thresholded_lasso(const CVResult& step1,
                                  const DesignMatrix& X,
                                  std::span<const int> y,
                                  int num_classes,
                                  double t0,
                                  const SelectionSettings& settings)
{
    const PositionSet survivors = active_positions(step1.refit.coef, X, t0);
    if (survivors.positions.empty()) {
        const double largest = step1.refit.coef.beta.size() ? step1.refit.coef.beta.cwiseAbs().maxCoeff() : 0.0;
        throw ValidationError("no coefficient reaches threshold " + format_double(t0) +
                              "; the largest usable threshold is " + format_double(largest));
    }

    const auto refit = fit_restricted(X, y, num_classes, survivors.positions, PenaltySpec::lasso(), settings,
                                      derive_seed(settings.cv.seed, kRefitStream));
    PositionSet kept = active_positions(refit.coef, refit.design, 0.0);

    SelectionReport report;
    report.method = "tlasso";
    report.selected = std::move(kept);
    report.n_positions = report.selected.size();
    report.cv_misclassification = refit.misclassification;
    report.cv_standard_error = refit.standard_error;
    report.tuning = {{"threshold", t0},
                     {"lambda_step1", step1.best_lambda},
                     {"lambda_refit", refit.lambda},
                     {"positions_pre_refit", survivors.size()},
                     {"positions_step1", active_positions(step1.refit.coef, X, 0.0).size()},
                     {"folds", settings.cv.folds}};
    report.history = {{1, active_positions(step1.refit.coef, X, 0.0).size(), 1.0 - step1.best_accuracy()},
                      {2, survivors.size(), -1.0},
                      {3, report.n_positions, refit.misclassification}};
    report.metadata.emplace_back("misclassification", "stratified CV of the re-tuned refit on surviving positions");
    return report;
}

SelectionReport thresholded_lasso(const DesignMatrix& X,
                                  std::span<const int> y,
                                  int num_classes,
                                  double t0,
                                  const SelectionSettings& settings)
{
    return thresholded_lasso(lasso_step(X, y, num_classes, settings), X, y, num_classes, t0, settings);
}

std::vector<double> auto_threshold_grid(const CoefficientTensor& coef, int count)
{
    if (count < 1) {
        throw ValidationError("threshold grid needs at least one point");
    }
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < coef.beta.size(); ++i) {
        const double a = std::abs(coef.beta.data()[i]);
        if (a > kNonzero) {
            mags.push_back(a);
        }
    }
    if (mags.empty()) {
        return {0.0};
    }
    std::sort(mags.begin(), mags.end());
    auto quantile = [&](double prob) {
        const double pos = prob * static_cast<double>(mags.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, mags.size() - 1);
        return mags[lo] + (pos - static_cast<double>(lo)) * (mags[hi] - mags[lo]);
    };
    const double lo = quantile(0.01);
    const double hi = quantile(0.99);
    if (count == 1 || !(hi > lo)) {
        return {lo};
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (count - 1));
    }
    return grid;
}

ThresholdSweep threshold_sweep(CVResult step1,
                               const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               std::vector<double> grid,
                               const SelectionSettings& settings)
{
    if (grid.empty()) {
        throw ValidationError("threshold grid is empty");
    }
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw ValidationError("threshold grid must be ascending");
    }
    ThresholdSweep sweep;
    sweep.step1 = std::move(step1);
    sweep.rows.resize(grid.size());

    // thresholds with identical survivor sets share one refit
    std::map<std::vector<int>, std::size_t> first_row;
    std::vector<std::size_t> owner(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (grid[r] < 0.0) {
            throw ValidationError("thresholds must be nonnegative");
        }
        sweep.rows[r].threshold = grid[r];
        const auto survivors = active_positions(sweep.step1.refit.coef, X, grid[r]).positions;
        sweep.rows[r].survivors = static_cast<int>(survivors.size());
        owner[r] = first_row.emplace(survivors, r).first->second;
    }
    std::vector<std::size_t> unique_rows;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (owner[r] == r) {
            unique_rows.push_back(r);
        }
    }
    parallel_for(0, unique_rows.size(), [&](std::size_t u) {
        auto& row = sweep.rows[unique_rows[u]];
        try {
            row.report = thresholded_lasso(sweep.step1, X, y, num_classes, row.threshold, settings);
        } catch (const ValidationError& e) {
            row.error = e.what();
        }
    });
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (owner[r] != r) {
            const auto& src = sweep.rows[owner[r]];
            sweep.rows[r].error = src.error;
            if (src.report) {
                sweep.rows[r].report = src.report;
                auto& tuning = sweep.rows[r].report->tuning;
                for (auto& [key, value] : tuning) {
                    if (key == "threshold") {
                        value = grid[r];
                    }
                }
            }
        }
    }
    sweep.elbow = sweep_elbow(sweep.rows);
    return sweep;
}

ThresholdSweep threshold_sweep(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               std::vector<double> grid,
                               const SelectionSettings& settings)
{
    return threshold_sweep(lasso_step(X, y, num_classes, settings), X, y, num_classes, std::move(grid), settings);
}

std::optional<std::size_t> sweep_elbow(const std::vector<SweepRow>& rows)
{
    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].report &&
            (!best || rows[r].report->cv_misclassification < rows[*best].report->cv_misclassification)) {
            best = r;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    const double limit = rows[*best].report->cv_misclassification + rows[*best].report->cv_standard_error;
    std::optional<std::size_t> elbow;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& rep = rows[r].report;
        if (!rep || rep->cv_misclassification > limit + 1e-12) {
            continue;
        }
        if (!elbow || rep->n_positions < rows[*elbow].report->n_positions) {
            elbow = r;
        }
    }
    return elbow;
}

SelectionReport sweep_report(const ThresholdSweep& sweep)
{
    if (!sweep.elbow) {
        throw ValidationError("no threshold in the sweep produced a selection");
    }
    SelectionReport report = *sweep.rows[*sweep.elbow].report;
    report.metadata.emplace_back("threshold_rule", "fewest positions within one standard error of the best sweep row");
    report.curve_name = "threshold";
    report.curve.clear();
    for (const auto& row : sweep.rows) {
        CurvePoint point;
        point.tuning = row.threshold;
        point.pre_refit_positions = row.survivors;
        if (row.report) {
            point.n_positions = row.report->n_positions;
            point.misclassification = row.report->cv_misclassification;
        } else {
            point.valid = false;
            point.note = row.error;
        }
        report.curve.push_back(point);
    }
    return report;
}

SelectionReport repeated_lasso(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               int window,
                               int max_rounds,
                               const SelectionSettings& settings)
{
    if (window < 1) {
        throw ValidationError("stability window must be at least 1");
    }
    if (max_rounds < window) {
        throw ValidationError("max_rounds must be at least the stability window");
    }
    SelectionReport report;
    report.method = "repeated";

    std::vector<int> current = X.positions();
    int unchanged = 0;
    int round = 0;
    bool stabilized = false;
    double last_mis = 0.0;
    double last_se = 0.0;
    while (round < max_rounds) {
        ++round;
        const auto fit = fit_restricted(X, y, num_classes, current, PenaltySpec::lasso(), settings,
                                        derive_seed(settings.cv.seed, kRoundStream + static_cast<std::uint64_t>(round)));
        std::vector<int> next = active_positions(fit.coef, fit.design, 0.0).positions;
        report.history.push_back({round, static_cast<int>(next.size()), fit.misclassification});
        last_mis = fit.misclassification;
        last_se = fit.standard_error;
        unchanged = next == current ? unchanged + 1 : 0;
        current = std::move(next);
        if (unchanged >= window) {
            stabilized = true;
            break;
        }
        if (current.empty()) {
            break;
        }
    }

    report.selected.positions = current;
    report.n_positions = static_cast<int>(current.size());
    const auto scored = fit_restricted(X, y, num_classes, current, PenaltySpec::lasso(), settings,
                                       derive_seed(settings.cv.seed, kScoreStream));
    report.cv_misclassification = scored.misclassification;
    report.cv_standard_error = scored.standard_error;
    report.tuning = {{"window", window},
                     {"max_rounds", max_rounds},
                     {"rounds", round},
                     {"stabilized", stabilized ? 1.0 : 0.0},
                     {"last_round_cv_misclassification", last_mis},
                     {"last_round_cv_standard_error", last_se},
                     {"folds", settings.cv.folds}};
    report.curve_name = "round";
    for (const auto& h : report.history) {
        report.curve.push_back({static_cast<double>(h.step), -1, h.n_positions, h.misclassification, true, {}});
    }
    return report;
}

std::vector<PathRow> lambda_path_table(const DesignMatrix& X,
                                       std::span<const int> y,
                                       int num_classes,
                                       const std::vector<double>& lambdas,
                                       const SelectionSettings& settings,
                                       PathMode mode)
{
    if (lambdas.empty()) {
        throw ValidationError("lambda list is empty");
    }
    for (double lam : lambdas) {
        if (!(lam > 0.0)) {
            throw ValidationError("lambdas must be positive");
        }
    }
    const PenaltySpec penalty = PenaltySpec::lasso();
    std::vector<PathRow> rows(lambdas.size());

    if (mode == PathMode::threshold_fit) {
        const CVResult step1 = lasso_step(X, y, num_classes, settings);
        parallel_for(0, lambdas.size(), [&](std::size_t r) {
            const auto kept = active_positions(step1.refit.coef, X, lambdas[r]);
            const auto scored = fit_restricted(X, y, num_classes, kept.positions, penalty, settings,
                                               derive_seed(settings.cv.seed, kScoreStream));
            rows[r] = {lambdas[r], kept.size(), scored.misclassification};
        });
        return rows;
    }

    // fits along the lambdas in descending order for warm starts, reported in input order
    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        order[r] = r;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });
    std::vector<PositionSet> active(lambdas.size());
    std::optional<CoefficientTensor> warm;
    for (std::size_t r : order) {
        FitResult fit = fit_penalized(X, y, num_classes, penalty, lambdas[r], warm ? &*warm : nullptr,
                                      settings.cv.solver);
        active[r] = active_positions(fit.coef, X, 0.0);
        warm = std::move(fit.coef);
    }
    parallel_for(0, lambdas.size(), [&](std::size_t r) {
        const DesignMatrix restricted = X.restrict_to_positions(active[r].positions);
        double mis = 0.0;
        CvOptions cv = settings.cv;
        cv.seed = derive_seed(settings.cv.seed, kScoreStream);
        if (restricted.cols() == 0) {
            mis = majority_cv(y, num_classes, cv, cv.seed).first;
        } else {
            const CVResult res = cross_validate(restricted, y, num_classes, penalty, {lambdas[r]}, cv);
            mis = 1.0 - res.best_accuracy();
        }
        rows[r] = {lambdas[r], active[r].size(), mis};
    });
    return rows;
}

SelectionReport penalized_selection(const DesignMatrix& X,
                                    std::span<const int> y,
                                    int num_classes,
                                    const PenaltySpec& penalty,
                                    const SelectionSettings& settings)
{
    const PenaltySpec bound = penalty.rebind(X);
    const auto grid = lambda_grid(X, y, num_classes, bound, settings.lambda_count, settings.lambda_ratio);
    const CVResult cv = cross_validate(X, y, num_classes, bound, grid, settings.cv);

    SelectionReport report;
    report.method = penalty.kind == PenaltyKind::group          ? "group"
                    : penalty.kind == PenaltyKind::sparse_group ? "sgl"
                                                                : "lasso";
    report.selected = active_positions(cv.refit.coef, X, 0.0);
    report.n_positions = report.selected.size();
    const auto scored = fit_restricted(X, y, num_classes, report.selected.positions, bound, settings,
                                       derive_seed(settings.cv.seed, kScoreStream));
    report.cv_misclassification = scored.misclassification;
    report.cv_standard_error = scored.standard_error;
    report.tuning = {{"lambda", cv.best_lambda}, {"step1_cv_misclassification", 1.0 - cv.best_accuracy()}};
    if (penalty.kind == PenaltyKind::sparse_group) {
        report.tuning.emplace_back("alpha", penalty.alpha);
    }
    report.tuning.emplace_back("folds", settings.cv.folds);
    report.metadata.emplace_back("penalty", to_string(penalty.kind));
    report.metadata.emplace_back("group_scope",
                                 penalty.scope == GroupScope::across_classes ? "across_classes" : "per_class");

    // full-data path over the whole grid for the positions-vs-error curve
    report.curve_name = "lambda";
    std::optional<CoefficientTensor> warm;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        FitResult fit = fit_penalized(X, y, num_classes, bound, grid[k], warm ? &*warm : nullptr, settings.cv.solver);
        CurvePoint point;
        point.tuning = grid[k];
        point.n_positions = active_positions(fit.coef, X, 0.0).size();
        point.misclassification = 1.0 - cv.mean_accuracy[k];
        report.curve.push_back(point);
        warm = std::move(fit.coef);
    }
    return report;
}

} // namespace seqsel
