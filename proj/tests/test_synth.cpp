#include <doctest.h>

#include <oracles.hpp>

#include <seqsel/error.hpp>
#include <seqsel/select.hpp>
#include <seqsel/synth.hpp>

#include <json.hpp>

#include <cmath>

using namespace seqsel;

namespace {

// Cramer's V between two state columns.
double cramers_v(const SequenceDataset& ds, int a, int b)
{
    const int q = ds.q();
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < ds.n(); ++i) {
        table(ds.state(i, a), ds.state(i, b)) += 1.0;
    }
    const Eigen::VectorXd rows = table.rowwise().sum();
    const Eigen::RowVectorXd cols = table.colwise().sum();
    const double n = table.sum();
    double chi2 = 0.0;
    for (int r = 0; r < q; ++r) {
        for (int c = 0; c < q; ++c) {
            const double expected = rows(r) * cols(c) / n;
            if (expected > 0) {
                chi2 += (table(r, c) - expected) * (table(r, c) - expected) / expected;
            }
        }
    }
    return std::sqrt(chi2 / (n * (q - 1)));
}

double copy_rate(const SequenceDataset& ds)
{
    double same = 0.0;
    for (int i = 0; i < ds.n(); ++i) {
        for (int j = 1; j < ds.p(); ++j) {
            same += ds.state(i, j) == ds.state(i, j - 1);
        }
    }
    return same / (ds.n() * (ds.p() - 1.0));
}

} // namespace

TEST_CASE("benchmark spec")
{
    auto spec = SynthSpec::benchmark();
    spec.validate();
    CHECK(spec.n == 600);
    CHECK(spec.p == 60);
    CHECK(spec.q == 4);
    CHECK(spec.num_classes == 3);
    CHECK(spec.informative.size() == 6);
    CHECK(spec.markov_persistence == 0.6);

    auto back = SynthSpec::from_json(spec.to_json());
    CHECK(back.to_json() == spec.to_json());
}

TEST_CASE("spec validation")
{
    auto bad = SynthSpec::benchmark();
    bad.markov_persistence = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = SynthSpec::benchmark();
    bad.informative.push_back(60);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = SynthSpec::benchmark();
    bad.class_probs = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = SynthSpec::benchmark();
    bad.theta_background = {1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(SynthSpec::from_json("{"), FormatError);
    CHECK_THROWS_AS(SynthSpec::from_json(R"({"n": "many"})"), FormatError);
}

TEST_CASE("generation is reproducible and labelled")
{
    auto spec = SynthSpec::benchmark();
    spec.n = 200;
    auto [a, truth] = generate(spec);
    auto [b, truth_b] = generate(spec);
    CHECK(a.states() == b.states());
    CHECK(truth.labels == truth_b.labels);
    CHECK(a.n() == 200);
    CHECK(a.p() == 60);
    CHECK(a.position_names().front() == "t01");
    CHECK(a.ids().front() == "seq0001");
    REQUIRE(a.outcome());
    CHECK(a.outcome()->labels == std::vector<std::string>{"1", "2", "3"});
    CHECK(truth.labels == a.outcome()->classes);

    spec.seed = 1;
    CHECK(generate(spec).first.states() != a.states());

    const auto j = nlohmann::json::parse(truth.to_json(a));
    CHECK(j["informative_names"].get<std::vector<std::string>>() ==
          std::vector<std::string>{"t06", "t15", "t24", "t33", "t42", "t51"});
    CHECK(j["labels"].size() == 200);
}

TEST_CASE("persistence controls neighbour dependence")
{
    auto spec = SynthSpec::benchmark();
    spec.n = 2000;
    spec.informative.clear();
    spec.theta_informative.assign(3, {});
    spec.theta_background = {0.25, 0.25, 0.25, 0.25};
    spec.markov_persistence = 0.0;
    auto flat = generate(spec).first;
    double worst = 0.0;
    for (int j = 1; j < flat.p(); ++j) {
        worst = std::max(worst, cramers_v(flat, j - 1, j));
    }
    CHECK(worst < 0.08);
    CHECK(copy_rate(flat) == doctest::Approx(0.25).epsilon(0.05));

    spec.markov_persistence = 0.6;
    auto sticky = generate(spec).first;
    // copy with 0.6, otherwise match by chance with 0.25
    CHECK(copy_rate(sticky) == doctest::Approx(0.6 + 0.4 * 0.25).epsilon(0.03));
    CHECK(cramers_v(sticky, 10, 11) > 0.4);
}

TEST_CASE("planted positions follow the class distributions")
{
    auto spec = SynthSpec::benchmark();
    spec.markov_persistence = 0.0;
    auto [ds, truth] = generate(spec);
    for (int i = 0; i < ds.n(); ++i) {
        for (int j : truth.informative) {
            CHECK(ds.state(i, j) == truth.labels[static_cast<std::size_t>(i)]);
        }
    }
}

TEST_CASE("irrepresentability statistic")
{
    // exact copy of the support column
    Eigen::MatrixXd copy(4, 2);
    copy << 1, 1, 0, 0, 1, 1, 0, 0;
    const std::vector<int> first{0};
    const std::vector<int> plus{1};
    CHECK(irrepresentability_stat(oracle::dense_design(copy, 2), first, plus).value >= 1.0);

    // disjoint supports are orthogonal
    Eigen::MatrixXd orth(4, 2);
    orth << 1, 0, 1, 0, 0, 1, 0, 1;
    CHECK(irrepresentability_stat(oracle::dense_design(orth, 2), first, plus).value <= 1e-10);

    Eigen::MatrixXd twin(4, 3);
    twin << 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1;
    const std::vector<int> both{0, 1};
    const std::vector<int> signs{1, -1};
    CHECK_THROWS_AS(irrepresentability_stat(oracle::dense_design(twin, 3), both, signs), ValidationError);
    auto ridged = irrepresentability_stat(oracle::dense_design(twin, 3), both, signs, true);
    CHECK(ridged.ridge_stabilized);
    const std::vector<int> zero{0};
    CHECK_THROWS_AS(irrepresentability_stat(oracle::dense_design(orth, 2), first, zero), ValidationError);
}

TEST_CASE("selection scoring against the truth")
{
    GroundTruth truth;
    truth.informative = {1, 4, 7};
    PositionSet sel;
    sel.positions = {1, 2, 4, 5, 9, 11};
    auto s = score_selection(sel, truth);
    CHECK(s.recall == doctest::Approx(2.0 / 3));
    CHECK(*s.precision == doctest::Approx(2.0 / 6));
    CHECK(s.overselection == 2.0);
    CHECK_FALSE(score_selection(PositionSet{}, truth).precision);
}
