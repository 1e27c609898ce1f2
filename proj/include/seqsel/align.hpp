#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <seqsel/seqdata.hpp>

namespace seqsel {

/// Optimal-matching edit costs. Substitution is symmetric with a zero
/// diagonal and nonnegative entries; indel is strictly positive.
class CostScheme
{
public:
    CostScheme(Eigen::MatrixXd substitution, double indel);

    /// Same substitution cost for every pair of distinct states.
    static CostScheme constant(int num_states, double substitution = 2.0, double indel = 1.0);

    int num_states() const { return static_cast<int>(substitution_.rows()); }
    double substitution(int a, int b) const { return substitution_(a, b); }
    double indel() const { return indel_; }
    const Eigen::MatrixXd& substitution_matrix() const { return substitution_; }

private:
    Eigen::MatrixXd substitution_;
    double indel_;
};

/// Minimal total cost of substitutions and insertions/deletions turning a into b.
double om_distance(std::span<const StateIndex> a, std::span<const StateIndex> b, const CostScheme& costs);

/// Symmetric n x n dissimilarities with zero diagonal, stored as the strict
/// lower triangle in row-major order: (1,0), (2,0), (2,1), (3,0), ...
class DistanceMatrix
{
public:
    explicit DistanceMatrix(int n = 0);
    DistanceMatrix(int n, std::vector<double> lower);

    int size() const { return n_; }

    double operator()(int i, int j) const
    {
        if (i == j) {
            return 0.0;
        }
        return i > j ? lower_[index(i, j)] : lower_[index(j, i)];
    }
    void set(int i, int j, double value);

    const std::vector<double>& lower_triangle() const { return lower_; }

    /// Binary layout: magic "OMD1", n as uint64 little-endian, then the strict
    /// lower triangle as little-endian float64 in row-major order.
    void write_binary(const std::filesystem::path& path) const;
    static DistanceMatrix read_binary(const std::filesystem::path& path);

    /// Full square matrix with an id header row and id first column.
    void write_csv(const std::filesystem::path& path, const std::vector<std::string>& ids) const;

private:
    static std::size_t index(int i, int j)
    {
        return static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) - 1) / 2 + static_cast<std::size_t>(j);
    }

    int n_;
    std::vector<double> lower_;
};

/// All pairwise optimal-matching distances between the dataset's sequences.
DistanceMatrix pairwise_distances(const SequenceDataset& ds, const CostScheme& costs);

} // namespace seqsel
