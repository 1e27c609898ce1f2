#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include <seqsel/select.hpp>
#include <seqsel/seqdata.hpp>

namespace seqsel {

/// Classification tree node. Leaves have column == -1; internal nodes send
/// rows with x[column] == 0 left and x[column] == 1 right.
struct TreeNode
{
    int column = -1;
    int left = -1;
    int right = -1;
    int depth = 0;
    std::vector<double> distribution; // class shares of the in-bag rows reaching the node
    int predicted = 0;                // argmax of distribution, ties to the smallest class
};

struct Tree
{
    std::vector<TreeNode> nodes; // nodes[0] is the root
    std::vector<int> in_bag;     // bootstrap row indices, with repeats
    std::vector<int> oob;        // rows never drawn, ascending

    int depth() const;
};

struct ForestOptions
{
    int n_trees = 100;
    int max_depth = 15;
    std::uint64_t seed = 0;
    std::optional<int> mtry; // candidate columns per split; default floor(sqrt(C))
};

struct Forest
{
    std::vector<Tree> trees;
    int n_trees = 0;
    int max_depth = 0;
    int num_classes = 0;
    int num_columns = 0;
    std::uint64_t seed = 0;
};

/// Bootstrap forest of Gini trees on the binary design. Candidate columns are
/// drawn per node from a stream derived from the tree seed and the node's path,
/// so a forest grown to depth d equals a deeper forest truncated at d.
Forest fit_forest(const DesignMatrix& X, std::span<const int> y, int num_classes, const ForestOptions& options);

/// Same, with caller-supplied bootstrap draws (one index list per tree).
Forest fit_forest(const DesignMatrix& X,
                  std::span<const int> y,
                  int num_classes,
                  const ForestOptions& options,
                  const std::vector<std::vector<int>>& bootstraps);

/// Majority vote of the trees, each read at depth <= depth_limit (ties to the
/// smallest class). depth_limit < 0 uses the full trees.
std::vector<int> predict_forest(const Forest& forest, const DesignMatrix& X, int depth_limit = -1);

/// Mean decrease in Gini impurity per design column.
struct ImportanceVector
{
    std::vector<double> values;
};

/// Routes each tree's in-bag rows through its splits and accumulates
/// n_node / n_boot * (G_node - sum_child n_child / n_node * G_child) per split
/// column, averaged over trees.
ImportanceVector gini_importance(const Forest& forest, const DesignMatrix& X, std::span<const int> y);

/// Largest importance among each position's columns (0 for absent positions).
std::vector<double> position_importance(const ImportanceVector& importance, const DesignMatrix& X);

/// Positions whose best column reaches the threshold.
PositionSet select_positions_by_importance(const ImportanceVector& importance, double threshold, const DesignMatrix& X);

double gini_impurity(std::span<const double> counts);

/// Stratified K-fold accuracy of forests grown to options.max_depth and read
/// at every depth 1..max_depth. Column d-1 of fold_accuracy is depth d.
struct ForestCv
{
    std::vector<double> mean_accuracy;
    Eigen::MatrixXd fold_accuracy; // folds x depths
};

ForestCv cross_validate_forest(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               const ForestOptions& options,
                               int folds,
                               std::uint64_t fold_seed);

struct ForestSelectionSettings
{
    ForestOptions forest;
    int min_depth = 1;
    int folds = 10;
    int threshold_count = 40;
    std::vector<double> thresholds; // explicit grid; empty means automatic
};

/// Depth by CV accuracy over min_depth..forest.max_depth (ties to the
/// shallower), importance of the refit forest, then an importance-threshold
/// sweep where each distinct position set is scored by forest CV on the
/// restricted design. The reported selection is the fewest-positions row
/// within one standard error of the best.
SelectionReport forest_selection(const DesignMatrix& X,
                                 std::span<const int> y,
                                 int num_classes,
                                 const ForestSelectionSettings& settings,
                                 ImportanceVector* importance_out = nullptr);

} // namespace seqsel
