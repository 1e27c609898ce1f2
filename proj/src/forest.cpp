#include <seqsel/forest.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>
#include <seqsel/penreg.hpp>
#include <seqsel/rng.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace seqsel {

namespace {

constexpr double kMinDecrease = 1e-12;
constexpr std::uint64_t kFoldStream = 100;
constexpr std::uint64_t kDepthStream = 3;
constexpr std::uint64_t kScoreStream = 2;

// Column-major 0/1 copy of the design for fast split scans.
class BinaryColumns
{
public:
    explicit BinaryColumns(const DesignMatrix& X)
        : rows_(X.rows()), cols_(X.cols()), data_(static_cast<std::size_t>(rows_) * cols_, 0)
    {
        const auto& v = X.values();
        for (int i = 0; i < v.outerSize(); ++i) {
            for (DesignMatrix::Sparse::InnerIterator it(v, i); it; ++it) {
                if (it.value() != 0.0) {
                    data_[static_cast<std::size_t>(it.col()) * rows_ + i] = 1;
                }
            }
        }
    }

    const std::uint8_t* column(int c) const { return data_.data() + static_cast<std::size_t>(c) * rows_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

private:
    int rows_;
    int cols_;
    std::vector<std::uint8_t> data_;
};

std::vector<double> class_counts(std::span<const int> rows, std::span<const int> y, int num_classes)
{
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (int r : rows) {
        counts[static_cast<std::size_t>(y[r])] += 1.0;
    }
    return counts;
}

int argmax_smallest(std::span<const double> v)
{
    int best = 0;
    for (int k = 1; k < static_cast<int>(v.size()); ++k) {
        if (v[k] > v[best]) {
            best = k;
        }
    }
    return best;
}

struct SplitScore
{
    double decrease = 0.0;
    std::vector<double> left;
    std::vector<double> right;
};

// Gini decrease of splitting `rows` on column c; nullopt if one side is empty.
std::optional<SplitScore> score_split(const std::uint8_t* col,
                                      std::span<const int> rows,
                                      std::span<const int> y,
                                      const std::vector<double>& counts,
                                      int num_classes)
{
    SplitScore s;
    s.right.assign(static_cast<std::size_t>(num_classes), 0.0);
    double n_right = 0.0;
    for (int r : rows) {
        if (col[r]) {
            s.right[static_cast<std::size_t>(y[r])] += 1.0;
            n_right += 1.0;
        }
    }
    const double n = static_cast<double>(rows.size());
    const double n_left = n - n_right;
    if (n_right == 0.0 || n_left == 0.0) {
        return std::nullopt;
    }
    s.left.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        s.left[k] = counts[k] - s.right[k];
    }
    s.decrease = gini_impurity(counts) - (n_left / n) * gini_impurity(s.left) - (n_right / n) * gini_impurity(s.right);
    return s;
}

// Floyd's sampling of m distinct columns from [0, C), returned ascending.
std::vector<int> sample_columns(Rng& rng, int C, int m)
{
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int j = C - m; j < C; ++j) {
        const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
        if (std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
        } else {
            out.push_back(j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Tree grow_tree(const BinaryColumns& data,
               std::span<const int> y,
               int num_classes,
               int max_depth,
               int mtry,
               std::vector<int> in_bag,
               std::uint64_t tree_seed)
{
    Tree tree;
    tree.in_bag = std::move(in_bag);
    {
        std::vector<char> drawn(static_cast<std::size_t>(data.rows()), 0);
        for (int r : tree.in_bag) {
            drawn[static_cast<std::size_t>(r)] = 1;
        }
        for (int r = 0; r < data.rows(); ++r) {
            if (!drawn[static_cast<std::size_t>(r)]) {
                tree.oob.push_back(r);
            }
        }
    }

    struct Pending
    {
        int node;
        std::vector<int> rows;
        std::uint64_t seed;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, tree.in_bag, derive_seed(tree_seed, 1)});

    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        const auto counts = class_counts(cur.rows, y, num_classes);
        const double n = static_cast<double>(cur.rows.size());
        const int depth = tree.nodes[static_cast<std::size_t>(cur.node)].depth;
        {
            auto& node = tree.nodes[static_cast<std::size_t>(cur.node)];
            node.distribution.resize(counts.size());
            for (std::size_t k = 0; k < counts.size(); ++k) {
                node.distribution[k] = n > 0.0 ? counts[k] / n : 0.0;
            }
            node.predicted = argmax_smallest(counts);
        }
        const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
        if (depth >= max_depth || pure) {
            continue;
        }

        Rng rng(cur.seed);
        int best_col = -1;
        double best_dec = kMinDecrease;
        for (int c : sample_columns(rng, data.cols(), mtry)) {
            const auto s = score_split(data.column(c), cur.rows, y, counts, num_classes);
            if (s && s->decrease > best_dec) {
                best_dec = s->decrease;
                best_col = c;
            }
        }
        if (best_col < 0) {
            continue;
        }

        std::vector<int> left_rows;
        std::vector<int> right_rows;
        const std::uint8_t* col = data.column(best_col);
        for (int r : cur.rows) {
            (col[r] ? right_rows : left_rows).push_back(r);
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[static_cast<std::size_t>(left)].depth = depth + 1;
        tree.nodes[static_cast<std::size_t>(left) + 1].depth = depth + 1;
        auto& node = tree.nodes[static_cast<std::size_t>(cur.node)];
        node.column = best_col;
        node.left = left;
        node.right = left + 1;
        stack.push_back({left + 1, std::move(right_rows), derive_seed(cur.seed, 1)});
        stack.push_back({left, std::move(left_rows), derive_seed(cur.seed, 0)});
    }
    return tree;
}

void check_inputs(const DesignMatrix& X, std::span<const int> y, int num_classes, const ForestOptions& options)
{
    if (options.n_trees < 1) {
        throw ValidationError("n_trees must be at least 1");
    }
    if (options.max_depth < 1) {
        throw ValidationError("max_depth must be at least 1");
    }
    if (options.mtry && (*options.mtry < 1 || *options.mtry > X.cols())) {
        throw ValidationError("mtry must lie in 1..number of columns");
    }
    if (static_cast<int>(y.size()) != X.rows()) {
        throw ValidationError("outcome length does not match design rows");
    }
    if (X.cols() == 0) {
        throw ValidationError("design has no columns");
    }
    std::vector<char> seen(static_cast<std::size_t>(num_classes), 0);
    for (int c : y) {
        if (c < 0 || c >= num_classes) {
            throw ValidationError("outcome class out of range");
        }
        seen[static_cast<std::size_t>(c)] = 1;
    }
    if (std::count(seen.begin(), seen.end(), 1) < 2) {
        throw ValidationError("random forest needs at least two outcome classes");
    }
}

int default_mtry(int columns)
{
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(columns)))));
}

// Predicted class of `row` at every depth 0..max_depth for one tree.
void path_predictions(const Tree& tree, const BinaryColumns& data, int row, int max_depth, std::vector<int>& out)
{
    out.assign(static_cast<std::size_t>(max_depth) + 1, 0);
    int node = 0;
    for (int d = 0; d <= max_depth; ++d) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
        out[static_cast<std::size_t>(d)] = nd.predicted;
        if (nd.column >= 0 && d < max_depth) {
            node = data.column(nd.column)[row] ? nd.right : nd.left;
        }
    }
}

std::string format_double(double v)
{
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

} // namespace

int Tree::depth() const
{
    int d = 0;
    for (const auto& n : nodes) {
        d = std::max(d, n.depth);
    }
    return d;
}

double gini_impurity(std::span<const double> counts)
{
    double n = 0.0;
    for (double c : counts) {
        n += c;
    }
    if (n <= 0.0) {
        return 0.0;
    }
    double sq = 0.0;
    for (double c : counts) {
        sq += (c / n) * (c / n);
    }
    return std::max(0.0, 1.0 - sq);
}

Forest fit_forest(const DesignMatrix& X,
                  std::span<const int> y,
                  int num_classes,
                  const ForestOptions& options,
                  const std::vector<std::vector<int>>& bootstraps)
{
    check_inputs(X, y, num_classes, options);
    if (static_cast<int>(bootstraps.size()) != options.n_trees) {
        throw ValidationError("need one bootstrap sample per tree");
    }
    for (const auto& b : bootstraps) {
        if (b.empty()) {
            throw ValidationError("bootstrap sample is empty");
        }
        for (int r : b) {
            if (r < 0 || r >= X.rows()) {
                throw ValidationError("bootstrap index out of range");
            }
        }
    }
    const BinaryColumns data(X);
    const int mtry = options.mtry.value_or(default_mtry(X.cols()));

    Forest forest;
    forest.n_trees = options.n_trees;
    forest.max_depth = options.max_depth;
    forest.num_classes = num_classes;
    forest.num_columns = X.cols();
    forest.seed = options.seed;
    forest.trees.resize(static_cast<std::size_t>(options.n_trees));
    parallel_for(0, forest.trees.size(), [&](std::size_t t) {
        forest.trees[t] = grow_tree(data, y, num_classes, options.max_depth, mtry, bootstraps[t],
                                    derive_seed(options.seed, t));
    });
    return forest;
}

Forest fit_forest(const DesignMatrix& X, std::span<const int> y, int num_classes, const ForestOptions& options)
{
    check_inputs(X, y, num_classes, options);
    std::vector<std::vector<int>> bootstraps(static_cast<std::size_t>(options.n_trees));
    const auto n = static_cast<std::uint64_t>(X.rows());
    for (std::size_t t = 0; t < bootstraps.size(); ++t) {
        Rng rng(derive_seed(derive_seed(options.seed, t), 0));
        bootstraps[t].resize(n);
        for (auto& r : bootstraps[t]) {
            r = static_cast<int>(rng.below(n));
        }
    }
    return fit_forest(X, y, num_classes, options, bootstraps);
}

std::vector<int> predict_forest(const Forest& forest, const DesignMatrix& X, int depth_limit)
{
    if (X.cols() != forest.num_columns) {
        throw ValidationError("design width does not match the forest");
    }
    const BinaryColumns data(X);
    const int limit = depth_limit < 0 ? forest.max_depth : std::min(depth_limit, forest.max_depth);
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    std::vector<double> votes(static_cast<std::size_t>(forest.num_classes));
    std::vector<int> path;
    for (int i = 0; i < X.rows(); ++i) {
        std::fill(votes.begin(), votes.end(), 0.0);
        for (const auto& tree : forest.trees) {
            path_predictions(tree, data, i, limit, path);
            votes[static_cast<std::size_t>(path.back())] += 1.0;
        }
        out[static_cast<std::size_t>(i)] = argmax_smallest(votes);
    }
    return out;
}

ImportanceVector gini_importance(const Forest& forest, const DesignMatrix& X, std::span<const int> y)
{
    if (X.cols() != forest.num_columns || static_cast<int>(y.size()) != X.rows()) {
        throw ValidationError("design does not match the forest");
    }
    const BinaryColumns data(X);
    ImportanceVector imp;
    imp.values.assign(static_cast<std::size_t>(X.cols()), 0.0);
    for (const auto& tree : forest.trees) {
        const double n_boot = static_cast<double>(tree.in_bag.size());
        std::vector<std::pair<int, std::vector<int>>> stack{{0, tree.in_bag}};
        while (!stack.empty()) {
            auto [node_id, rows] = std::move(stack.back());
            stack.pop_back();
            const auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
            if (node.column < 0 || rows.empty()) {
                continue;
            }
            const auto counts = class_counts(rows, y, forest.num_classes);
            const auto s = score_split(data.column(node.column), rows, y, counts, forest.num_classes);
            if (s) {
                imp.values[static_cast<std::size_t>(node.column)] +=
                    static_cast<double>(rows.size()) / n_boot * std::max(0.0, s->decrease);
            }
            std::vector<int> left;
            std::vector<int> right;
            const std::uint8_t* col = data.column(node.column);
            for (int r : rows) {
                (col[r] ? right : left).push_back(r);
            }
            stack.emplace_back(node.left, std::move(left));
            stack.emplace_back(node.right, std::move(right));
        }
    }
    for (double& v : imp.values) {
        v /= static_cast<double>(forest.trees.size());
    }
    return imp;
}

std::vector<double> position_importance(const ImportanceVector& importance, const DesignMatrix& X)
{
    if (static_cast<int>(importance.values.size()) != X.cols()) {
        throw ValidationError("importance length does not match design width");
    }
    std::vector<double> out(static_cast<std::size_t>(X.num_positions()), 0.0);
    for (const auto& g : X.groups()) {
        for (int c = g.begin; c < g.begin + g.size; ++c) {
            out[static_cast<std::size_t>(g.position)] =
                std::max(out[static_cast<std::size_t>(g.position)], importance.values[static_cast<std::size_t>(c)]);
        }
    }
    return out;
}

PositionSet select_positions_by_importance(const ImportanceVector& importance, double threshold, const DesignMatrix& X)
{
    if (threshold < 0.0) {
        throw ValidationError("importance threshold must be nonnegative");
    }
    const auto pos = position_importance(importance, X);
    PositionSet out;
    for (const auto& g : X.groups()) {
        const double v = pos[static_cast<std::size_t>(g.position)];
        // threshold 0 keeps positions with a column used in some split
        if (threshold == 0.0 ? v > 0.0 : v >= threshold) {
            out.positions.push_back(g.position);
        }
    }
    std::sort(out.positions.begin(), out.positions.end());
    out.positions.erase(std::unique(out.positions.begin(), out.positions.end()), out.positions.end());
    return out;
}

ForestCv cross_validate_forest(const DesignMatrix& X,
                               std::span<const int> y,
                               int num_classes,
                               const ForestOptions& options,
                               int folds,
                               std::uint64_t fold_seed)
{
    check_inputs(X, y, num_classes, options);
    const auto fold_of = stratified_folds(y, num_classes, folds, fold_seed);
    const int D = options.max_depth;
    ForestCv cv;
    cv.fold_accuracy = Eigen::MatrixXd::Zero(folds, D);

    parallel_for(0, static_cast<std::size_t>(folds), [&](std::size_t f) {
        std::vector<int> train;
        std::vector<int> test;
        for (std::size_t i = 0; i < fold_of.size(); ++i) {
            (fold_of[i] == static_cast<int>(f) ? test : train).push_back(static_cast<int>(i));
        }
        const DesignMatrix Xtr = X.select_rows(train);
        std::vector<int> ytr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            ytr[i] = y[static_cast<std::size_t>(train[i])];
        }
        ForestOptions opts = options;
        opts.seed = derive_seed(options.seed, kFoldStream + f);
        const Forest forest = fit_forest(Xtr, ytr, num_classes, opts);

        const DesignMatrix Xte = X.select_rows(test);
        const BinaryColumns data(Xte);
        // votes[d][row][class] for depth d+1
        std::vector<double> votes(static_cast<std::size_t>(D) * test.size() * num_classes, 0.0);
        std::vector<int> path;
        for (const auto& tree : forest.trees) {
            for (std::size_t i = 0; i < test.size(); ++i) {
                path_predictions(tree, data, static_cast<int>(i), D, path);
                for (int d = 1; d <= D; ++d) {
                    votes[((static_cast<std::size_t>(d) - 1) * test.size() + i) * num_classes +
                          static_cast<std::size_t>(path[static_cast<std::size_t>(d)])] += 1.0;
                }
            }
        }
        for (int d = 1; d <= D; ++d) {
            int right = 0;
            for (std::size_t i = 0; i < test.size(); ++i) {
                const double* v = votes.data() + ((static_cast<std::size_t>(d) - 1) * test.size() + i) * num_classes;
                right += argmax_smallest(std::span<const double>(v, static_cast<std::size_t>(num_classes))) ==
                         y[static_cast<std::size_t>(test[i])];
            }
            cv.fold_accuracy(static_cast<Eigen::Index>(f), d - 1) =
                static_cast<double>(right) / static_cast<double>(test.size());
        }
    });
    cv.mean_accuracy.resize(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) {
        cv.mean_accuracy[static_cast<std::size_t>(d)] = cv.fold_accuracy.col(d).mean();
    }
    return cv;
}

SelectionReport forest_selection(const DesignMatrix& X,
                                 std::span<const int> y,
                                 int num_classes,
                                 const ForestSelectionSettings& settings,
                                 ImportanceVector* importance_out)
{
    const ForestOptions& base = settings.forest;
    if (settings.min_depth < 1 || settings.min_depth > base.max_depth) {
        throw ValidationError("depth range must satisfy 1 <= min_depth <= max_depth");
    }
    if (settings.threshold_count < 1) {
        throw ValidationError("threshold count must be at least 1");
    }

    const ForestCv depth_cv = cross_validate_forest(X, y, num_classes, base, settings.folds,
                                                    derive_seed(base.seed, kDepthStream));
    int best_depth = settings.min_depth;
    for (int d = settings.min_depth; d <= base.max_depth; ++d) {
        if (depth_cv.mean_accuracy[static_cast<std::size_t>(d) - 1] >
            depth_cv.mean_accuracy[static_cast<std::size_t>(best_depth) - 1]) {
            best_depth = d;
        }
    }

    ForestOptions chosen = base;
    chosen.max_depth = best_depth;
    const Forest forest = fit_forest(X, y, num_classes, chosen);
    const ImportanceVector imp = gini_importance(forest, X, y);
    if (importance_out) {
        *importance_out = imp;
    }

    std::vector<double> grid = settings.thresholds;
    if (grid.empty()) {
        std::vector<double> mags;
        for (double v : position_importance(imp, X)) {
            if (v > 0.0) {
                mags.push_back(v);
            }
        }
        std::sort(mags.begin(), mags.end());
        if (mags.empty()) {
            grid = {0.0};
        } else {
            auto quantile = [&](double prob) {
                const double pos = prob * static_cast<double>(mags.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, mags.size() - 1);
                return mags[lo] + (pos - static_cast<double>(lo)) * (mags[hi] - mags[lo]);
            };
            const double lo = quantile(0.01);
            const double hi = quantile(0.99);
            const int count = hi > lo ? settings.threshold_count : 1;
            for (int k = 0; k < count; ++k) {
                grid.push_back(count == 1 ? lo
                                          : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (count - 1)));
            }
        }
    }
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw ValidationError("importance thresholds must be ascending");
    }

    std::vector<SweepRow> rows(grid.size());
    std::vector<PositionSet> sets(grid.size());
    std::map<std::vector<int>, std::size_t> first;
    std::vector<std::size_t> owner(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        sets[r] = select_positions_by_importance(imp, grid[r], X);
        rows[r].threshold = grid[r];
        rows[r].survivors = sets[r].size();
        owner[r] = first.emplace(sets[r].positions, r).first->second;
    }
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (owner[r] != r) {
            continue;
        }
        auto& row = rows[r];
        if (sets[r].positions.empty()) {
            row.error = "no position reaches importance threshold " + format_double(grid[r]);
            continue;
        }
        const DesignMatrix restricted = X.restrict_to_positions(sets[r].positions);
        ForestOptions opts = chosen;
        if (opts.mtry) {
            opts.mtry = std::min(*opts.mtry, restricted.cols());
        }
        const ForestCv scored = cross_validate_forest(restricted, y, num_classes, opts, settings.folds,
                                                      derive_seed(base.seed, kScoreStream));
        const auto col = static_cast<Eigen::Index>(best_depth) - 1;
        const Eigen::VectorXd err = 1.0 - scored.fold_accuracy.col(col).array();
        const double mean = err.mean();
        double se = 0.0;
        if (err.size() > 1) {
            se = std::sqrt((err.array() - mean).square().sum() / static_cast<double>(err.size() - 1) /
                           static_cast<double>(err.size()));
        }
        SelectionReport rep;
        rep.method = "forest";
        rep.selected = sets[r];
        rep.n_positions = sets[r].size();
        rep.cv_misclassification = mean;
        rep.cv_standard_error = se;
        row.report = std::move(rep);
    }
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (owner[r] != r) {
            rows[r].report = rows[owner[r]].report;
            rows[r].error = rows[owner[r]].error;
        }
    }

    const auto elbow = sweep_elbow(rows);
    if (!elbow) {
        throw ValidationError("no importance threshold produced a selection");
    }
    SelectionReport report = *rows[*elbow].report;
    report.tuning = {{"threshold", grid[*elbow]},
                     {"max_depth", best_depth},
                     {"depth_cv_accuracy", depth_cv.mean_accuracy[static_cast<std::size_t>(best_depth) - 1]},
                     {"n_trees", base.n_trees},
                     {"mtry", base.mtry.value_or(default_mtry(X.cols()))},
                     {"folds", settings.folds}};
    report.metadata.emplace_back("importance", "mean decrease in Gini impurity, max over a position's columns");
    report.metadata.emplace_back("threshold_rule", "fewest positions within one standard error of the best sweep row");
    for (int d = settings.min_depth; d <= base.max_depth; ++d) {
        report.history.push_back({d, -1, 1.0 - depth_cv.mean_accuracy[static_cast<std::size_t>(d) - 1]});
    }
    report.curve_name = "importance_threshold";
    for (const auto& row : rows) {
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

} // namespace seqsel
