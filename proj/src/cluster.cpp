#include <seqsel/cluster.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>

namespace seqsel {

std::vector<int> ClusterLabels::sizes() const
{
    std::vector<int> out(static_cast<std::size_t>(num_clusters), 0);
    for (int l : labels) {
        ++out[static_cast<std::size_t>(l)];
    }
    return out;
}

namespace {

// Ordering key for candidate merges: linkage value, then node ids.
struct MergeKey
{
    double value = std::numeric_limits<double>::infinity();
    int lo = std::numeric_limits<int>::max();
    int hi = std::numeric_limits<int>::max();

    bool operator<(const MergeKey& other) const
    {
        return std::tie(value, lo, hi) < std::tie(other.value, other.lo, other.hi);
    }
};

} // namespace

Dendrogram average_linkage(const DistanceMatrix& distances)
{
    const int n = distances.size();
    if (n < 2) {
        throw ValidationError("average linkage needs at least 2 observations");
    }

    // Slot-indexed state. sum(a,b) holds the total of all cross-pair distances
    // between the clusters in slots a and b; the linkage value is
    // sum / (size_a * size_b). Summing is the Lance-Williams update for UPGMA
    // in unnormalised form.
    std::vector<double> sum(static_cast<std::size_t>(n) * n, 0.0);
    auto at = [&](int a, int b) -> double& { return sum[static_cast<std::size_t>(a) * n + b]; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            at(i, j) = at(j, i) = distances(i, j);
        }
    }
    std::vector<int> node(static_cast<std::size_t>(n));
    std::iota(node.begin(), node.end(), 0);
    std::vector<int> size(static_cast<std::size_t>(n), 1);
    std::vector<char> active(static_cast<std::size_t>(n), 1);
    std::vector<int> nearest(static_cast<std::size_t>(n), -1);
    std::vector<MergeKey> nearest_key(static_cast<std::size_t>(n));

    auto key_of = [&](int a, int b) {
        const int na = node[static_cast<std::size_t>(a)];
        const int nb = node[static_cast<std::size_t>(b)];
        return MergeKey{at(a, b) / (static_cast<double>(size[static_cast<std::size_t>(a)]) *
                                    size[static_cast<std::size_t>(b)]),
                        std::min(na, nb), std::max(na, nb)};
    };
    auto refresh = [&](int a) {
        MergeKey best;
        int arg = -1;
        for (int b = 0; b < n; ++b) {
            if (b == a || !active[static_cast<std::size_t>(b)]) {
                continue;
            }
            const MergeKey k = key_of(a, b);
            if (k < best) {
                best = k;
                arg = b;
            }
        }
        nearest[static_cast<std::size_t>(a)] = arg;
        nearest_key[static_cast<std::size_t>(a)] = best;
    };
    for (int a = 0; a < n; ++a) {
        refresh(a);
    }

    Dendrogram out;
    out.num_leaves = n;
    out.merges.reserve(static_cast<std::size_t>(n - 1));
    for (int step = 0; step < n - 1; ++step) {
        int a = -1;
        MergeKey best;
        for (int s = 0; s < n; ++s) {
            if (active[static_cast<std::size_t>(s)] && nearest_key[static_cast<std::size_t>(s)] < best) {
                best = nearest_key[static_cast<std::size_t>(s)];
                a = s;
            }
        }
        int b = nearest[static_cast<std::size_t>(a)];
        // the merged cluster lives in slot a; slot b is retired
        const int merged_size = size[static_cast<std::size_t>(a)] + size[static_cast<std::size_t>(b)];
        out.merges.push_back({best.lo, best.hi, best.value, merged_size});

        for (int c = 0; c < n; ++c) {
            if (c == a || c == b || !active[static_cast<std::size_t>(c)]) {
                continue;
            }
            at(a, c) = at(c, a) = at(a, c) + at(b, c);
        }
        active[static_cast<std::size_t>(b)] = 0;
        size[static_cast<std::size_t>(a)] = merged_size;
        node[static_cast<std::size_t>(a)] = n + step;

        refresh(a);
        for (int c = 0; c < n; ++c) {
            if (c == a || !active[static_cast<std::size_t>(c)]) {
                continue;
            }
            const int nc = nearest[static_cast<std::size_t>(c)];
            if (nc == a || nc == b) {
                refresh(c);
            } else {
                const MergeKey k = key_of(c, a);
                if (k < nearest_key[static_cast<std::size_t>(c)]) {
                    nearest_key[static_cast<std::size_t>(c)] = k;
                    nearest[static_cast<std::size_t>(c)] = a;
                }
            }
        }
    }
    return out;
}

ClusterLabels cut(const Dendrogram& dendrogram, int k)
{
    const int n = dendrogram.num_leaves;
    if (k < 1 || k > n) {
        throw ValidationError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
    if (static_cast<int>(dendrogram.merges.size()) != n - 1) {
        throw ValidationError("dendrogram must contain n-1 merges");
    }

    // union-find over node ids, applying the first n-k merges
    std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int t = 0; t < n - k; ++t) {
        const auto& m = dendrogram.merges[static_cast<std::size_t>(t)];
        parent[static_cast<std::size_t>(find(m.left))] = n + t;
        parent[static_cast<std::size_t>(find(m.right))] = n + t;
    }

    ClusterLabels out;
    out.labels.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> label_of_root(static_cast<std::size_t>(2 * n - 1), -1);
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        int& label = label_of_root[static_cast<std::size_t>(root)];
        if (label < 0) {
            label = out.num_clusters++;
        }
        out.labels[static_cast<std::size_t>(i)] = label;
    }
    return out;
}

double dunn_index(const DistanceMatrix& distances, const ClusterLabels& labels)
{
    const int n = distances.size();
    if (static_cast<int>(labels.labels.size()) != n) {
        throw ValidationError("label count does not match distance matrix size");
    }
    if (labels.num_clusters < 2) {
        throw ValidationError("Dunn index needs at least 2 clusters");
    }
    std::vector<int> sizes = labels.sizes();
    if (std::any_of(sizes.begin(), sizes.end(), [](int s) { return s == 0; })) {
        throw ValidationError("every cluster must be nonempty");
    }

    double min_between = std::numeric_limits<double>::infinity();
    double max_within = 0.0;
    for (int i = 1; i < n; ++i) {
        const int li = labels.labels[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j) {
            const double d = distances(i, j);
            if (li == labels.labels[static_cast<std::size_t>(j)]) {
                max_within = std::max(max_within, d);
            } else {
                min_between = std::min(min_between, d);
            }
        }
    }
    if (max_within == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return min_between / max_within;
}

ClusterCountSelection select_num_clusters(const Dendrogram& dendrogram,
                                          const DistanceMatrix& distances,
                                          int k_min,
                                          int k_max)
{
    const int n = dendrogram.num_leaves;
    if (k_min > k_max) {
        throw ValidationError("empty cluster-count range");
    }
    if (k_min < 2 || k_max > n) {
        throw ValidationError("cluster-count range must lie within [2, " + std::to_string(n) + "]");
    }
    ClusterCountSelection out;
    out.k_min = k_min;
    out.k_max = k_max;
    out.scores.assign(static_cast<std::size_t>(k_max - k_min + 1), 0.0);
    parallel_for(0, out.scores.size(), [&](std::size_t t) {
        out.scores[t] = dunn_index(distances, cut(dendrogram, k_min + static_cast<int>(t)));
    });
    std::size_t best = 0;
    for (std::size_t t = 1; t < out.scores.size(); ++t) {
        if (out.scores[t] > out.scores[best]) {
            best = t;
        }
    }
    out.k = k_min + static_cast<int>(best);
    out.labels = cut(dendrogram, out.k);
    return out;
}

ClusterLabels merge_small(const ClusterLabels& labels, int min_size)
{
    if (min_size < 1) {
        throw ValidationError("minimum cluster size must be at least 1");
    }
    const std::vector<int> sizes = labels.sizes();
    std::vector<int> remap(sizes.size(), -1);
    ClusterLabels out;
    bool any_small = false;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] >= min_size) {
            remap[c] = out.num_clusters++;
        } else if (sizes[c] > 0) {
            any_small = true;
        }
    }
    if (any_small) {
        const int noise = out.num_clusters++;
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            if (remap[c] < 0) {
                remap[c] = noise;
            }
        }
        out.noise_cluster = noise;
    } else {
        out.noise_cluster = labels.noise_cluster;
    }
    out.labels.reserve(labels.labels.size());
    for (int l : labels.labels) {
        out.labels.push_back(remap[static_cast<std::size_t>(l)]);
    }
    return out;
}

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& ids,
                      const ClusterLabels& labels)
{
    if (ids.size() != labels.labels.size()) {
        throw ValidationError("id count does not match label count");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out << "id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << labels.labels[i] + 1 << '\n';
    }
}

void write_dendrogram_csv(const std::filesystem::path& path, const Dendrogram& dendrogram)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out.precision(17);
    out << "step,left,right,height,size\n";
    for (std::size_t t = 0; t < dendrogram.merges.size(); ++t) {
        const auto& m = dendrogram.merges[t];
        out << t + 1 << ',' << m.left << ',' << m.right << ',' << m.height << ',' << m.size << '\n';
    }
}

} // namespace seqsel
