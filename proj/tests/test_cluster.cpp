#include <doctest.h>

#include <oracles.hpp>

#include <seqsel/cluster.hpp>
#include <seqsel/error.hpp>

#include <random>

using namespace seqsel;

namespace {

DistanceMatrix random_integer_matrix(int n, int range, std::mt19937_64& gen)
{
    DistanceMatrix d(n);
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            d.set(i, j, static_cast<double>(1 + gen() % static_cast<std::uint64_t>(range)));
        }
    }
    return d;
}

// two tight groups {0,1,2} and {3,4} far apart
DistanceMatrix two_blobs()
{
    DistanceMatrix d(5);
    for (int i = 1; i < 5; ++i) {
        for (int j = 0; j < i; ++j) {
            const bool same = (i < 3) == (j < 3);
            d.set(i, j, same ? 1.0 : 10.0);
        }
    }
    return d;
}

} // namespace

TEST_CASE("average linkage on two separated groups")
{
    auto dend = average_linkage(two_blobs());
    REQUIRE(dend.merges.size() == 4);
    CHECK(dend.merges.back().height == 10.0);
    CHECK(dend.merges.back().size == 5);
    for (std::size_t t = 0; t + 1 < dend.merges.size(); ++t) {
        CHECK(dend.merges[t].height == 1.0);
        CHECK(dend.merges[t].left < dend.merges[t].right);
    }
    // tie rule: the first merge joins leaves 0 and 1
    CHECK(dend.merges[0].left == 0);
    CHECK(dend.merges[0].right == 1);

    auto two = cut(dend, 2);
    CHECK(two.labels == std::vector<int>{0, 0, 0, 1, 1});
    CHECK(two.sizes() == std::vector<int>{3, 2});
    CHECK(dunn_index(two_blobs(), two) == 10.0);
}

TEST_CASE("average linkage matches the naive reference")
{
    std::mt19937_64 gen(11);
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(gen() % 15);
        auto d = random_integer_matrix(n, 4, gen);
        auto dend = average_linkage(d);
        auto ref = oracle::upgma_naive(n, [&](int i, int j) { return d(i, j); });
        REQUIRE(dend.merges.size() == ref.size());
        for (std::size_t s = 0; s < ref.size(); ++s) {
            CHECK(dend.merges[s].left == ref[s].left);
            CHECK(dend.merges[s].right == ref[s].right);
            CHECK(dend.merges[s].height == doctest::Approx(ref[s].height).epsilon(1e-12));
            CHECK(dend.merges[s].size == ref[s].size);
        }
    }
}

TEST_CASE("merge heights never decrease")
{
    std::mt19937_64 gen(3);
    auto d = random_integer_matrix(30, 50, gen);
    auto dend = average_linkage(d);
    for (std::size_t s = 1; s < dend.merges.size(); ++s) {
        CHECK(dend.merges[s].height >= dend.merges[s - 1].height - 1e-12);
    }
}

TEST_CASE("cuts are nested and numbered by first appearance")
{
    std::mt19937_64 gen(5);
    auto d = random_integer_matrix(12, 20, gen);
    auto dend = average_linkage(d);
    CHECK(cut(dend, 1).labels == std::vector<int>(12, 0));
    auto all = cut(dend, 12);
    for (int i = 0; i < 12; ++i) {
        CHECK(all.labels[static_cast<std::size_t>(i)] == i);
    }
    for (int k = 2; k <= 12; ++k) {
        auto fine = cut(dend, k);
        auto coarse = cut(dend, k - 1);
        CHECK(fine.num_clusters == k);
        int next = 0;
        for (int l : fine.labels) {
            CHECK(l <= next);
            next = std::max(next, l + 1);
        }
        // every fine cluster sits inside one coarse cluster
        std::vector<int> parent(static_cast<std::size_t>(k), -1);
        for (std::size_t i = 0; i < fine.labels.size(); ++i) {
            auto& p = parent[static_cast<std::size_t>(fine.labels[i])];
            if (p < 0) {
                p = coarse.labels[i];
            }
            CHECK(p == coarse.labels[i]);
        }
    }
    CHECK_THROWS_AS(cut(dend, 0), ValidationError);
    CHECK_THROWS_AS(cut(dend, 13), ValidationError);
}

TEST_CASE("Dunn index against the pair scan")
{
    std::mt19937_64 gen(9);
    for (int t = 0; t < 20; ++t) {
        const int n = 4 + static_cast<int>(gen() % 20);
        auto d = random_integer_matrix(n, 30, gen);
        auto dend = average_linkage(d);
        for (int k = 2; k < n; ++k) {
            auto labels = cut(dend, k);
            const double ref = oracle::dunn_naive(n, [&](int i, int j) { return d(i, j); }, labels.labels);
            CHECK(dunn_index(d, labels) == ref);
        }
    }
    ClusterLabels one{{0, 0, 0}, 1, std::nullopt};
    CHECK_THROWS_AS(dunn_index(DistanceMatrix(3), one), ValidationError);
}

TEST_CASE("cluster count selection picks the Dunn maximum")
{
    auto d = two_blobs();
    auto dend = average_linkage(d);
    auto sel = select_num_clusters(dend, d, 2, 4);
    CHECK(sel.k == 2);
    CHECK(sel.scores.size() == 3);
    CHECK(sel.scores[0] == 10.0);
    CHECK_THROWS_AS(select_num_clusters(dend, d, 1, 3), ValidationError);
    CHECK_THROWS_AS(select_num_clusters(dend, d, 3, 2), ValidationError);
}

TEST_CASE("small clusters pool into a trailing noise cluster")
{
    ClusterLabels labels{{0, 1, 1, 2, 1, 3, 3, 3}, 4, std::nullopt};
    auto merged = merge_small(labels, 3);
    CHECK(merged.num_clusters == 3);
    REQUIRE(merged.noise_cluster);
    CHECK(*merged.noise_cluster == 2);
    CHECK(merged.labels == std::vector<int>{2, 0, 0, 2, 0, 1, 1, 1});

    auto untouched = merge_small(labels, 1);
    CHECK(untouched.labels == labels.labels);
    CHECK_FALSE(untouched.noise_cluster);
}
