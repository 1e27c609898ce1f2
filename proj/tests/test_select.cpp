#include <doctest.h>

#include <oracles.hpp>

#include <seqsel/error.hpp>
#include <seqsel/select.hpp>
#include <seqsel/synth.hpp>

#include <random>

using namespace seqsel;

namespace {

// Two classes, each fully determined by the state at positions 2 or 6.
struct Small
{
    SequenceDataset data;
    GroundTruth truth;
    DesignMatrix X;
    std::vector<int> y;
};

Small small_problem(std::uint64_t seed = 1)
{
    SynthSpec spec;
    spec.n = 160;
    spec.p = 10;
    spec.q = 3;
    spec.num_classes = 2;
    spec.informative = {2, 6};
    spec.theta_informative = {{{0.8, 0.1, 0.1}, {0.8, 0.1, 0.1}}, {{0.1, 0.1, 0.8}, {0.1, 0.1, 0.8}}};
    spec.theta_background = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    spec.class_probs = {0.5, 0.5};
    spec.seed = seed;
    auto [data, truth] = generate(spec);
    auto X = encode_one_hot(data);
    auto y = data.outcome()->classes;
    return {std::move(data), std::move(truth), std::move(X), std::move(y)};
}

SelectionSettings quick()
{
    SelectionSettings s;
    s.lambda_count = 20;
    s.lambda_ratio = 1e-3;
    s.cv.folds = 5;
    s.cv.seed = 3;
    return s;
}

SweepRow row(double t, int n_positions, double mis, double se)
{
    SweepRow r;
    r.threshold = t;
    SelectionReport rep;
    rep.n_positions = n_positions;
    rep.cv_misclassification = mis;
    rep.cv_standard_error = se;
    r.report = rep;
    return r;
}

} // namespace

TEST_CASE("active positions by magnitude")
{
    std::mt19937_64 gen(1);
    auto X = oracle::random_one_hot(20, 3, 2, gen);
    REQUIRE(X.cols() == 6);
    auto c = CoefficientTensor::zeros(2, 6);
    c.beta(0, 1) = 0.5;
    c.beta(1, 4) = -0.05;
    auto all = active_positions(c, X, 0.0);
    CHECK(all.positions == std::vector<int>{0, 2});
    REQUIRE(all.per_class);
    CHECK((*all.per_class)[0] == std::vector<int>{0});
    CHECK((*all.per_class)[1] == std::vector<int>{2});
    CHECK(active_positions(c, X, 0.1).positions == std::vector<int>{0});
    CHECK(active_positions(c, X, 0.05).positions == std::vector<int>{0, 2});
    CHECK(all.contains(2));
    CHECK_FALSE(all.contains(1));
}

TEST_CASE("survivor counts never grow along an ascending threshold grid")
{
    std::mt19937_64 gen(2);
    std::normal_distribution<double> z;
    for (int t = 0; t < 50; ++t) {
        auto X = oracle::random_one_hot(10, 8, 3, gen);
        auto c = CoefficientTensor::zeros(3, X.cols());
        for (Eigen::Index k = 0; k < c.beta.size(); ++k) {
            c.beta.data()[k] = gen() % 3 == 0 ? 0.0 : z(gen);
        }
        auto grid = auto_threshold_grid(c, 25);
        CHECK(std::is_sorted(grid.begin(), grid.end()));
        int previous = active_positions(c, X, 0.0).size();
        for (double th : grid) {
            const int now = active_positions(c, X, th).size();
            CHECK(now <= previous);
            previous = now;
        }
    }
}

TEST_CASE("automatic threshold grid spans the coefficient quantiles")
{
    auto c = CoefficientTensor::zeros(1, 101);
    for (int k = 0; k <= 100; ++k) {
        c.beta(0, k) = 0.01 * (k + 1);
    }
    auto grid = auto_threshold_grid(c);
    REQUIRE(grid.size() == 40);
    CHECK(grid.front() == doctest::Approx(0.02));
    CHECK(grid.back() == doctest::Approx(1.0));
    CHECK(grid[1] / grid[0] == doctest::Approx(grid[39] / grid[38]));
    CHECK(auto_threshold_grid(CoefficientTensor::zeros(2, 3)) == std::vector<double>{0.0});
}

TEST_CASE("elbow takes the smallest selection within one standard error")
{
    std::vector<SweepRow> rows{row(0.1, 12, 0.05, 0.01), row(0.2, 8, 0.04, 0.02), row(0.3, 5, 0.055, 0.01),
                               row(0.4, 3, 0.07, 0.01), row(0.5, 5, 0.06, 0.01)};
    rows.push_back(SweepRow{0.6, 0, std::nullopt, "empty"});
    auto elbow = sweep_elbow(rows);
    REQUIRE(elbow);
    CHECK(*elbow == 2);
    CHECK_FALSE(sweep_elbow({SweepRow{0.1, 0, std::nullopt, "x"}}));
}

TEST_CASE("restricted fit with no positions predicts the majority")
{
    auto s = small_problem();
    auto fit = fit_restricted(s.X, s.y, 2, {}, PenaltySpec::lasso(), quick(), 5);
    CHECK(fit.positions.size() == 0);
    CHECK(fit.lambda == 0.0);
    CHECK(fit.misclassification >= 0.3);
    CHECK(fit.coef.num_columns() == 0);
}

TEST_CASE("thresholded lasso on a planted problem")
{
    auto s = small_problem();
    const auto settings = quick();
    auto step1 = lasso_step(s.X, s.y, 2, settings);
    auto plain = lasso_selection(step1, s.X, s.y, 2, settings);
    CHECK(plain.method == "lasso");
    CHECK(score_selection(plain.selected, s.truth).recall == 1.0);

    auto sweep = threshold_sweep(step1, s.X, s.y, 2, auto_threshold_grid(step1.refit.coef, 15), settings);
    REQUIRE(sweep.rows.size() == 15);
    for (std::size_t r = 1; r < sweep.rows.size(); ++r) {
        CHECK(sweep.rows[r].survivors <= sweep.rows[r - 1].survivors);
    }
    REQUIRE(sweep.elbow);
    auto rep = sweep_report(sweep);
    CHECK(rep.curve_name == "threshold");
    CHECK(rep.curve.size() == sweep.rows.size());
    CHECK(rep.n_positions <= plain.n_positions);
    CHECK(score_selection(rep.selected, s.truth).recall == 1.0);
    CHECK(rep.cv_misclassification <= 0.25);

    auto again = threshold_sweep(step1, s.X, s.y, 2, auto_threshold_grid(step1.refit.coef, 15), settings);
    CHECK(sweep_report(again).selected.positions == rep.selected.positions);

    const double too_big = 1e3;
    CHECK_THROWS_AS(thresholded_lasso(step1, s.X, s.y, 2, too_big, settings), ValidationError);
}

TEST_CASE("repeated lasso history does not grow")
{
    auto s = small_problem(2);
    auto rep = repeated_lasso(s.X, s.y, 2, 2, 10, quick());
    CHECK(rep.method == "repeated");
    REQUIRE(rep.history.size() >= 2);
    CHECK(static_cast<int>(rep.history.size()) <= 11);
    for (std::size_t k = 1; k < rep.history.size(); ++k) {
        CHECK(rep.history[k].n_positions <= rep.history[k - 1].n_positions);
    }
    CHECK(rep.n_positions == rep.history.back().n_positions);
    CHECK(score_selection(rep.selected, s.truth).recall == 1.0);
}

TEST_CASE("lambda path table")
{
    auto s = small_problem(3);
    const auto settings = quick();
    auto grid = lambda_grid(s.X, s.y, 2, PenaltySpec::lasso(), 6, 1e-2);
    auto rows = lambda_path_table(s.X, s.y, 2, grid, settings);
    REQUIRE(rows.size() == 6);
    CHECK(rows.front().n_positions == 0);
    CHECK(rows.back().n_positions >= 2);
    for (const auto& r : rows) {
        CHECK(r.misclassification >= 0.0);
        CHECK(r.misclassification <= 1.0);
    }
    std::vector<double> thresholds{0.5, 0.05, 0.001};
    auto by_threshold = lambda_path_table(s.X, s.y, 2, thresholds, settings, PathMode::threshold_fit);
    for (std::size_t k = 1; k < by_threshold.size(); ++k) {
        CHECK(by_threshold[k].n_positions >= by_threshold[k - 1].n_positions);
    }
}

TEST_CASE("group selection keeps whole positions")
{
    auto s = small_problem(4);
    auto rep = penalized_selection(s.X, s.y, 2, PenaltySpec::group(s.X), quick());
    CHECK(rep.method == "group");
    CHECK(score_selection(rep.selected, s.truth).recall == 1.0);
    CHECK_FALSE(rep.curve.empty());
    auto sgl = penalized_selection(s.X, s.y, 2, PenaltySpec::sparse_group(s.X, 0.5), quick());
    CHECK(sgl.method == "sgl");
    CHECK(sgl.tuning_value("alpha") == 0.5);
}
