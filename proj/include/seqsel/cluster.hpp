#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <seqsel/align.hpp>

namespace seqsel {

/// One agglomeration step. Node ids 0..n-1 are leaves; merge t creates node n+t.
struct Merge
{
    int left = 0;  // smaller node id
    int right = 0; // larger node id
    double height = 0.0;
    int size = 0;
};

struct Dendrogram
{
    int num_leaves = 0;
    std::vector<Merge> merges;
};

struct ClusterLabels
{
    std::vector<int> labels;
    int num_clusters = 0;
    std::optional<int> noise_cluster;

    std::vector<int> sizes() const;
};

/// UPGMA on a dissimilarity matrix. Ties in linkage value go to the pair with
/// the lexicographically smallest (min node id, max node id).
Dendrogram average_linkage(const DistanceMatrix& distances);

/// Partition obtained by undoing the last k-1 merges. Labels are numbered by
/// first appearance over the leaves 0..n-1.
ClusterLabels cut(const Dendrogram& dendrogram, int k);

/// Minimum between-cluster distance over maximum within-cluster diameter.
/// Returns +infinity when every cluster is a singleton.
double dunn_index(const DistanceMatrix& distances, const ClusterLabels& labels);

struct ClusterCountSelection
{
    int k = 0;
    ClusterLabels labels;
    int k_min = 0;
    int k_max = 0;
    std::vector<double> scores; // scores[k - k_min]
};

/// Scans k in [k_min, k_max] and keeps the Dunn-maximising cut (ties -> smaller k).
ClusterCountSelection select_num_clusters(const Dendrogram& dendrogram,
                                          const DistanceMatrix& distances,
                                          int k_min,
                                          int k_max);

/// Pools every cluster smaller than min_size into one noise cluster carrying the
/// last label index. Surviving clusters keep their relative order.
ClusterLabels merge_small(const ClusterLabels& labels, int min_size);

void write_labels_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& ids,
                      const ClusterLabels& labels);
void write_dendrogram_csv(const std::filesystem::path& path, const Dendrogram& dendrogram);

} // namespace seqsel
