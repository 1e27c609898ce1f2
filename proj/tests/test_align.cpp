#include <doctest.h>

#include <oracles.hpp>

#include <seqsel/align.hpp>
#include <seqsel/error.hpp>

#include <filesystem>
#include <random>

using namespace seqsel;

namespace {

std::vector<StateIndex> seq(std::initializer_list<int> s)
{
    return {s.begin(), s.end()};
}

} // namespace

TEST_CASE("optimal matching on hand-worked pairs")
{
    auto costs = CostScheme::constant(3, 2.0, 1.0);
    CHECK(om_distance(seq({0, 1, 2}), seq({0, 1, 2}), costs) == 0.0);
    CHECK(om_distance(seq({}), seq({0, 1}), costs) == 2.0);
    // substitution costs as much as an indel pair
    CHECK(om_distance(seq({0, 1}), seq({0, 2}), costs) == 2.0);
    CHECK(om_distance(seq({0, 1, 2}), seq({1, 2, 0}), costs) == 2.0);

    auto cheap = CostScheme::constant(3, 0.5, 1.0);
    CHECK(om_distance(seq({0, 1}), seq({2, 2}), cheap) == 1.0);
}

TEST_CASE("optimal matching is a symmetric dissimilarity")
{
    Eigen::MatrixXd sub(3, 3);
    sub << 0, 1.5, 3, 1.5, 0, 0.7, 3, 0.7, 0;
    CostScheme costs(sub, 1.1);
    std::mt19937_64 gen(7);
    for (int t = 0; t < 100; ++t) {
        std::vector<StateIndex> a(gen() % 9);
        std::vector<StateIndex> b(gen() % 9);
        for (auto& s : a) {
            s = static_cast<StateIndex>(gen() % 3);
        }
        for (auto& s : b) {
            s = static_cast<StateIndex>(gen() % 3);
        }
        const double d = om_distance(a, b, costs);
        CHECK(d == om_distance(b, a, costs));
        CHECK(d >= 0.0);
        std::vector<int> ai(a.begin(), a.end());
        std::vector<int> bi(b.begin(), b.end());
        CHECK(d == doctest::Approx(oracle::om_bruteforce(ai, bi, sub, 1.1)).epsilon(1e-12));
    }
}

TEST_CASE("cost scheme validation")
{
    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(CostScheme(asym, 1.0), ValidationError);
    Eigen::MatrixXd diag(2, 2);
    diag << 1, 1, 1, 0;
    CHECK_THROWS_AS(CostScheme(diag, 1.0), ValidationError);
    CHECK_THROWS_AS(CostScheme::constant(2, 2.0, 0.0), ValidationError);
    CHECK_THROWS_AS(CostScheme::constant(2, -1.0, 1.0), ValidationError);
}

TEST_CASE("distance matrix storage and binary round trip")
{
    DistanceMatrix d(4);
    d.set(1, 0, 1.0);
    d.set(2, 0, 2.0);
    d.set(1, 2, 3.0);
    d.set(3, 2, 0.125);
    CHECK(d(0, 1) == 1.0);
    CHECK(d(2, 1) == 3.0);
    CHECK(d(3, 3) == 0.0);
    CHECK(d.lower_triangle() == std::vector<double>{1.0, 2.0, 3.0, 0.0, 0.0, 0.125});

    const auto path = std::filesystem::temp_directory_path() / "seqsel_distances_test.omd";
    d.write_binary(path);
    CHECK(std::filesystem::file_size(path) == 4 + 8 + 6 * 8);
    auto back = DistanceMatrix::read_binary(path);
    CHECK(back.size() == 4);
    CHECK(back.lower_triangle() == d.lower_triangle());
    std::filesystem::remove(path);
}

TEST_CASE("pairwise distances on a dataset")
{
    auto ds = parse_sequences("id,t1,t2,t3\na,1,1,2\nb,1,2,2\nc,2,2,2\n");
    auto D = pairwise_distances(ds, CostScheme::constant(2));
    CHECK(D.size() == 3);
    CHECK(D(0, 1) == 2.0);
    CHECK(D(0, 2) == 4.0);
    CHECK(D(1, 2) == 2.0);
}
