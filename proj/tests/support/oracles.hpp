#pragma once
// Independent reference implementations used by the unit and acceptance tests.
// Each one is deliberately naive and shares no code with the library.

#include <seqsel/align.hpp>
#include <seqsel/cluster.hpp>
#include <seqsel/penreg.hpp>
#include <seqsel/seqdata.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <tuple>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Optimal matching by enumerating edit scripts.

/// Every script is a sequence of keep/substitute, delete and insert moves
/// consuming both inputs. Recursion without memoisation; branches that cannot
/// beat the best complete script are cut.
class EditScriptSearch
{
public:
    EditScriptSearch(const std::vector<int>& a, const std::vector<int>& b, const Eigen::MatrixXd& sub, double indel)
        : a_(a), b_(b), sub_(sub), indel_(indel), best_(indel * static_cast<double>(a.size() + b.size()))
    {
        walk(0, 0, 0.0);
    }

    double best() const { return best_; }

private:
    void walk(std::size_t i, std::size_t j, double cost)
    {
        const double rest_a = static_cast<double>(a_.size() - i);
        const double rest_b = static_cast<double>(b_.size() - j);
        // every remaining length difference costs at least one indel each
        if (cost + indel_ * std::abs(rest_a - rest_b) >= best_) {
            return;
        }
        if (i == a_.size() && j == b_.size()) {
            best_ = cost;
            return;
        }
        if (i < a_.size() && j < b_.size()) {
            walk(i + 1, j + 1, cost + (a_[i] == b_[j] ? 0.0 : sub_(a_[i], b_[j])));
        }
        if (i < a_.size()) {
            walk(i + 1, j, cost + indel_);
        }
        if (j < b_.size()) {
            walk(i, j + 1, cost + indel_);
        }
    }

    const std::vector<int>& a_;
    const std::vector<int>& b_;
    const Eigen::MatrixXd& sub_;
    double indel_;
    double best_;
};

inline double om_bruteforce(const std::vector<int>& a,
                            const std::vector<int>& b,
                            const Eigen::MatrixXd& sub,
                            double indel)
{
    return EditScriptSearch(a, b, sub, indel).best();
}

// ---------------------------------------------------------------------------
// Average linkage by recomputing every cluster pair from scratch.

struct NaiveMerge
{
    int left;
    int right;
    double height;
    int size;
};

/// Distances are read through `d(i, j)`; cluster distance is the sum of member
/// distances divided by the product of sizes. Ties: smallest (min id, max id).
inline std::vector<NaiveMerge> upgma_naive(int n, const std::function<double(int, int)>& d)
{
    std::vector<std::vector<int>> members(static_cast<std::size_t>(n));
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        members[static_cast<std::size_t>(i)] = {i};
        ids[static_cast<std::size_t>(i)] = i;
    }
    std::vector<NaiveMerge> out;
    for (int step = 0; step < n - 1; ++step) {
        std::tuple<double, int, int> best{std::numeric_limits<double>::infinity(), 0, 0};
        std::size_t ba = 0;
        std::size_t bb = 0;
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                double sum = 0.0;
                // sum in the order the library's updates would produce is not
                // assumed; integer inputs make every order exact
                for (int i : members[a]) {
                    for (int j : members[b]) {
                        sum += d(i, j);
                    }
                }
                const double value =
                    sum / (static_cast<double>(members[a].size()) * static_cast<double>(members[b].size()));
                const std::tuple<double, int, int> key{value, std::min(ids[a], ids[b]), std::max(ids[a], ids[b])};
                if (key < best) {
                    best = key;
                    ba = a;
                    bb = b;
                }
            }
        }
        std::vector<int> merged = members[ba];
        merged.insert(merged.end(), members[bb].begin(), members[bb].end());
        out.push_back({std::get<1>(best), std::get<2>(best), std::get<0>(best), static_cast<int>(merged.size())});
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(bb));
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(bb));
        members[ba] = std::move(merged);
        ids[ba] = n + step;
    }
    return out;
}

/// Dunn index by scanning every pair of observations.
inline double dunn_naive(int n, const std::function<double(int, int)>& d, const std::vector<int>& labels)
{
    double between = std::numeric_limits<double>::infinity();
    double within = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                within = std::max(within, d(i, j));
            } else {
                between = std::min(between, d(i, j));
            }
        }
    }
    if (within == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return between / within;
}

// ---------------------------------------------------------------------------
// Multinomial likelihood on a dense design.

inline double nll_dense(const Eigen::MatrixXd& X,
                        const std::vector<int>& y,
                        const Eigen::MatrixXd& beta,
                        const Eigen::VectorXd& b)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double top = -std::numeric_limits<double>::infinity();
        std::vector<double> eta(static_cast<std::size_t>(beta.rows()));
        for (Eigen::Index m = 0; m < beta.rows(); ++m) {
            double e = b(m);
            for (Eigen::Index c = 0; c < X.cols(); ++c) {
                e += X(i, c) * beta(m, c);
            }
            eta[static_cast<std::size_t>(m)] = e;
            top = std::max(top, e);
        }
        double s = 0.0;
        for (double e : eta) {
            s += std::exp(e - top);
        }
        total += top + std::log(s) - eta[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])];
    }
    return total / static_cast<double>(X.rows());
}

// ---------------------------------------------------------------------------
// Sparse-group proximal problem through its dual.

struct ProxCertificate
{
    Eigen::VectorXd u;     // primal point recovered from the dual iterate
    double lower_bound;    // dual objective value, <= optimal primal value
};

inline double prox_objective(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double a, double b)
{
    return 0.5 * (u - v).squaredNorm() + a * u.lpNorm<1>() + b * u.norm();
}

/// min_u 1/2|u - v|^2 + a|u|_1 + b|u|_2 via accelerated projected gradient on
/// min_{|s1|_inf <= 1, |s2|_2 <= 1} 1/2|v - a s1 - b s2|^2.
inline ProxCertificate prox_sparse_group_dual(const Eigen::VectorXd& v, double a, double b, int iterations = 20000)
{
    const Eigen::Index k = v.size();
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd s2 = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd y1 = s1;
    Eigen::VectorXd y2 = s2;
    const double lip = 2.0 * (a * a + b * b) + 1e-300;
    double t = 1.0;
    auto project = [](Eigen::VectorXd& p1, Eigen::VectorXd& p2) {
        p1 = p1.cwiseMax(-1.0).cwiseMin(1.0);
        const double n2 = p2.norm();
        if (n2 > 1.0) {
            p2 /= n2;
        }
    };
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd r = v - a * y1 - b * y2; // u at the extrapolated point
        Eigen::VectorXd n1 = y1 + (a / lip) * r;
        Eigen::VectorXd n2 = y2 + (b / lip) * r;
        project(n1, n2);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y1 = n1 + ((t - 1.0) / t_next) * (n1 - s1);
        y2 = n2 + ((t - 1.0) / t_next) * (n2 - s2);
        s1 = std::move(n1);
        s2 = std::move(n2);
        t = t_next;
    }
    ProxCertificate out;
    out.u = v - a * s1 - b * s2;
    // weak duality: 1/2|v|^2 - 1/2|u(s)|^2 is a lower bound for feasible s
    out.lower_bound = 0.5 * v.squaredNorm() - 0.5 * out.u.squaredNorm();
    return out;
}

// ---------------------------------------------------------------------------
// Optimality residual of the sparse-group proximal map.

/// For u = argmin 1/2|u - v|^2 + t a |u|_1 + t (1 - a) sum_g w_g |u_g|_2 the
/// subgradient condition is checked entry by entry (groups with u_g != 0) or
/// through |S_{ta}(v_g)|_2 <= t (1 - a) w_g (groups with u_g == 0). Returns the
/// largest violation. a = 1 with no groups is the plain L1 case.
inline double prox_residual(const Eigen::MatrixXd& v,
                            const Eigen::MatrixXd& u,
                            double t,
                            double a,
                            const std::vector<std::pair<std::vector<std::pair<int, int>>, double>>& blocks)
{
    const double l1 = t * a;
    double worst = 0.0;
    std::vector<char> covered(static_cast<std::size_t>(v.size()), 0);
    auto entry_residual = [&](int r, int c, double group_term) {
        const double g = v(r, c) - u(r, c) - group_term;
        if (u(r, c) != 0.0) {
            return std::abs(g - l1 * (u(r, c) > 0 ? 1.0 : -1.0));
        }
        return std::max(0.0, std::abs(g) - l1);
    };
    for (const auto& [cells, weight] : blocks) {
        const double gw = t * (1.0 - a) * weight;
        double norm = 0.0;
        for (auto [r, c] : cells) {
            norm += u(r, c) * u(r, c);
            covered[static_cast<std::size_t>(c) * static_cast<std::size_t>(v.rows()) + static_cast<std::size_t>(r)] = 1;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (auto [r, c] : cells) {
                worst = std::max(worst, entry_residual(r, c, gw * u(r, c) / norm));
            }
        } else {
            double shrunk = 0.0;
            for (auto [r, c] : cells) {
                const double s = std::max(0.0, std::abs(v(r, c)) - l1);
                shrunk += s * s;
            }
            worst = std::max(worst, std::max(0.0, std::sqrt(shrunk) - gw));
        }
    }
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            if (!covered[static_cast<std::size_t>(c * v.rows() + r)]) {
                worst = std::max(worst, entry_residual(static_cast<int>(r), static_cast<int>(c), 0.0));
            }
        }
    }
    return worst;
}

/// Blocks of a position-group layout with their weights, in either scope.
inline std::vector<std::pair<std::vector<std::pair<int, int>>, double>>
penalty_blocks(std::span<const seqsel::PositionGroup> groups, int classes, seqsel::GroupScope scope)
{
    std::vector<std::pair<std::vector<std::pair<int, int>>, double>> out;
    for (const auto& g : groups) {
        if (scope == seqsel::GroupScope::across_classes) {
            std::vector<std::pair<int, int>> cells;
            for (int m = 0; m < classes; ++m) {
                for (int c = g.begin; c < g.begin + g.size; ++c) {
                    cells.emplace_back(m, c);
                }
            }
            out.emplace_back(std::move(cells), std::sqrt(static_cast<double>(classes * g.size)));
        } else {
            for (int m = 0; m < classes; ++m) {
                std::vector<std::pair<int, int>> cells;
                for (int c = g.begin; c < g.begin + g.size; ++c) {
                    cells.emplace_back(m, c);
                }
                out.emplace_back(std::move(cells), std::sqrt(static_cast<double>(g.size)));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Finite differences.

/// Central difference gradient of f at x, one coordinate at a time.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          Eigen::VectorXd x,
                                          double h = 1e-5)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double keep = x(k);
        x(k) = keep + h;
        const double up = f(x);
        x(k) = keep - h;
        const double down = f(x);
        x(k) = keep;
        g(k) = (up - down) / (2.0 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Designs.

/// Wraps a dense matrix as a design whose columns are laid out position-major
/// with `states` columns per position.
inline seqsel::DesignMatrix dense_design(const Eigen::MatrixXd& X, int states)
{
    std::vector<seqsel::ColumnKey> keys;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        keys.push_back({static_cast<int>(c) / states, static_cast<int>(c) % states});
    }
    seqsel::DesignMatrix::Sparse sparse = X.sparseView();
    return seqsel::DesignMatrix(std::move(sparse), std::move(keys), {},
                                static_cast<int>((X.cols() + states - 1) / states), states);
}

/// One-hot design of random sequences: p positions over q states.
inline seqsel::DesignMatrix random_one_hot(int n, int p, int q, std::mt19937_64& gen)
{
    std::vector<seqsel::StateIndex> states(static_cast<std::size_t>(n) * static_cast<std::size_t>(p));
    for (auto& s : states) {
        s = static_cast<seqsel::StateIndex>(gen() % static_cast<std::uint64_t>(q));
    }
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
        ids.push_back("s" + std::to_string(i));
    }
    std::vector<std::string> names;
    for (int j = 0; j < p; ++j) {
        names.push_back("t" + std::to_string(j));
    }
    std::vector<std::string> labels;
    for (int k = 0; k < q; ++k) {
        labels.push_back(std::to_string(k));
    }
    seqsel::SequenceDataset ds(ids, names, seqsel::StateAlphabet(labels), std::move(states));
    return seqsel::encode_one_hot(ds);
}

/// Labels with every class present at least once.
inline std::vector<int> random_labels(int n, int classes, std::mt19937_64& gen)
{
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i < classes ? i : static_cast<int>(gen() % static_cast<std::uint64_t>(classes));
    }
    return y;
}

} // namespace oracle
