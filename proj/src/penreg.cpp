#include <seqsel/penreg.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>
#include <seqsel/rng.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <type_traits>

namespace seqsel {

CoefficientTensor CoefficientTensor::zeros(int num_classes, int num_columns)
{
    return {Eigen::MatrixXd::Zero(num_classes, num_columns), Eigen::VectorXd::Zero(num_classes)};
}

PenaltySpec PenaltySpec::lasso() { return {}; }

PenaltySpec PenaltySpec::group(const DesignMatrix& X, GroupScope scope)
{
    PenaltySpec spec;
    spec.kind = PenaltyKind::group;
    spec.alpha = 0.0;
    spec.scope = scope;
    spec.groups = X.groups();
    return spec;
}

PenaltySpec PenaltySpec::sparse_group(const DesignMatrix& X, double alpha, GroupScope scope)
{
    PenaltySpec spec;
    spec.kind = PenaltyKind::sparse_group;
    spec.alpha = alpha;
    spec.scope = scope;
    spec.groups = X.groups();
    return spec;
}

PenaltySpec PenaltySpec::rebind(const DesignMatrix& X) const
{
    PenaltySpec spec = *this;
    spec.groups = X.groups();
    return spec;
}

void PenaltySpec::validate(int num_columns) const
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("sparse-group alpha must lie in [0, 1]");
    }
    if (kind == PenaltyKind::lasso) {
        return;
    }
    int next = 0;
    for (const auto& g : groups) {
        if (g.size <= 0) {
            throw ValidationError("penalty group for position " + std::to_string(g.position) + " is empty");
        }
        if (g.begin != next) {
            throw ValidationError("penalty groups must partition the columns contiguously");
        }
        next += g.size;
    }
    if (next != num_columns) {
        throw ValidationError("penalty groups cover " + std::to_string(next) + " columns, design has " +
                              std::to_string(num_columns));
    }
}

const char* to_string(PenaltyKind kind)
{
    switch (kind) {
    case PenaltyKind::lasso:
        return "lasso";
    case PenaltyKind::group:
        return "group";
    case PenaltyKind::sparse_group:
        return "sparse_group";
    }
    return "unknown";
}

PenaltyKind parse_penalty_kind(std::string_view name)
{
    if (name == "lasso") {
        return PenaltyKind::lasso;
    }
    if (name == "group") {
        return PenaltyKind::group;
    }
    if (name == "sparse_group" || name == "sgl") {
        return PenaltyKind::sparse_group;
    }
    throw ValidationError("unknown penalty kind '" + std::string(name) + "'");
}

double group_weight(const PositionGroup& group, int num_classes, GroupScope scope)
{
    const double s = static_cast<double>(group.size);
    return scope == GroupScope::across_classes ? std::sqrt(s * num_classes) : std::sqrt(s);
}

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double t)
{
    if (t < 0.0) {
        throw ValidationError("prox threshold must be nonnegative");
    }
    return v.unaryExpr([t](double x) {
        const double shrunk = std::abs(x) - t;
        return shrunk > 0.0 ? std::copysign(shrunk, x) : 0.0;
    });
}

namespace {

void check_groups(std::span<const PositionGroup> groups, Eigen::Index cols)
{
    for (const auto& g : groups) {
        if (g.size <= 0) {
            throw ValidationError("penalty group for position " + std::to_string(g.position) + " is empty");
        }
        if (g.begin < 0 || g.begin + g.size > cols) {
            throw ValidationError("penalty group exceeds coefficient width");
        }
    }
}

// Block soft-threshold in place: x *= max(1 - threshold / ||x||, 0).
template <class Block>
void shrink_block(Block&& block, double threshold)
{
    const double norm = block.norm();
    if (norm <= threshold) {
        block.setZero();
    } else {
        block *= 1.0 - threshold / norm;
    }
}

void prox_group_inplace(Eigen::MatrixXd& v, double t, std::span<const PositionGroup> groups, GroupScope scope)
{
    const int classes = static_cast<int>(v.rows());
    for (const auto& g : groups) {
        const double threshold = t * group_weight(g, classes, scope);
        if (scope == GroupScope::across_classes) {
            shrink_block(v.middleCols(g.begin, g.size), threshold);
        } else {
            for (int m = 0; m < classes; ++m) {
                shrink_block(v.row(m).segment(g.begin, g.size), threshold);
            }
        }
    }
}

} // namespace

Eigen::MatrixXd prox_group(const Eigen::MatrixXd& v, double t, std::span<const PositionGroup> groups, GroupScope scope)
{
    if (t < 0.0) {
        throw ValidationError("prox threshold must be nonnegative");
    }
    check_groups(groups, v.cols());
    Eigen::MatrixXd out = v;
    prox_group_inplace(out, t, groups, scope);
    return out;
}

Eigen::MatrixXd prox_sparse_group(const Eigen::MatrixXd& v,
                                  double t,
                                  double alpha,
                                  std::span<const PositionGroup> groups,
                                  GroupScope scope)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ValidationError("sparse-group alpha must lie in [0, 1]");
    }
    Eigen::MatrixXd out = prox_l1(v, t * alpha);
    check_groups(groups, v.cols());
    prox_group_inplace(out, t * (1.0 - alpha), groups, scope);
    return out;
}

Eigen::MatrixXd prox_penalty(const Eigen::MatrixXd& v, double t, const PenaltySpec& penalty)
{
    switch (penalty.kind) {
    case PenaltyKind::lasso:
        return prox_l1(v, t);
    case PenaltyKind::group:
        return prox_group(v, t, penalty.groups, penalty.scope);
    case PenaltyKind::sparse_group:
        return prox_sparse_group(v, t, penalty.alpha, penalty.groups, penalty.scope);
    }
    return v;
}

namespace {

double group_norm_sum(const Eigen::MatrixXd& beta, std::span<const PositionGroup> groups, GroupScope scope)
{
    const int classes = static_cast<int>(beta.rows());
    double total = 0.0;
    for (const auto& g : groups) {
        const double w = group_weight(g, classes, scope);
        if (scope == GroupScope::across_classes) {
            total += w * beta.middleCols(g.begin, g.size).norm();
        } else {
            for (int m = 0; m < classes; ++m) {
                total += w * beta.row(m).segment(g.begin, g.size).norm();
            }
        }
    }
    return total;
}

} // namespace

double penalty_value(const Eigen::MatrixXd& beta, const PenaltySpec& penalty)
{
    switch (penalty.kind) {
    case PenaltyKind::lasso:
        return beta.cwiseAbs().sum();
    case PenaltyKind::group:
        return group_norm_sum(beta, penalty.groups, penalty.scope);
    case PenaltyKind::sparse_group:
        return (1.0 - penalty.alpha) * group_norm_sum(beta, penalty.groups, penalty.scope) +
               penalty.alpha * beta.cwiseAbs().sum();
    }
    return 0.0;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Multinomial likelihood over a sparse design. With centring on, the model is
// evaluated as eta = b + (X - 1 mean^T) beta^T, which is the same family as the
// uncentred model with intercept b - beta * mean. Intercepts are unpenalised,
// so both parametrisations have the same penalised minimum.
class Likelihood
{
public:
    Likelihood(const DesignMatrix& X, std::span<const int> y, int num_classes, bool centre)
        : X_(X.values()), y_(y), n_(X.rows()), cols_(X.cols()), classes_(num_classes)
    {
        if (static_cast<int>(y.size()) != n_) {
            throw ValidationError("outcome length " + std::to_string(y.size()) + " does not match design rows " +
                                  std::to_string(n_));
        }
        if (n_ == 0) {
            throw ValidationError("design has no rows");
        }
        if (classes_ < 1) {
            throw ValidationError("need at least one outcome class");
        }
        for (int c : y) {
            if (c < 0 || c >= classes_) {
                throw ValidationError("class index " + std::to_string(c) + " out of range");
            }
        }
        const double* values = X_.valuePtr();
        binary_ = std::all_of(values, values + X_.nonZeros(), [](double v) { return v == 1.0; });
        mean_ = Eigen::VectorXd::Zero(cols_);
        if (centre) {
            for (int i = 0; i < n_; ++i) {
                for (DesignMatrix::Sparse::InnerIterator it(X_, i); it; ++it) {
                    mean_(it.col()) += it.value();
                }
            }
            mean_ /= n_;
        }
    }

    int rows() const { return n_; }
    int cols() const { return cols_; }
    int classes() const { return classes_; }
    const Eigen::VectorXd& mean() const { return mean_; }

    void check_shape(const Eigen::MatrixXd& beta, const Eigen::VectorXd& b) const
    {
        if (beta.rows() != classes_ || beta.cols() != cols_ || b.size() != classes_) {
            throw ValidationError("coefficient shape " + std::to_string(beta.rows()) + "x" +
                                  std::to_string(beta.cols()) + " does not match " + std::to_string(classes_) + "x" +
                                  std::to_string(cols_));
        }
    }

    void linear_predictor(const Eigen::MatrixXd& beta, const Eigen::VectorXd& b, RowMatrix& eta) const
    {
        eta.resize(n_, classes_);
        const Eigen::VectorXd base = b - beta * mean_;
        with_classes([&](auto fixed) {
            if (binary_) {
                forward<decltype(fixed)::value, true>(beta.data(), base.data(), eta.data());
            } else {
                forward<decltype(fixed)::value, false>(beta.data(), base.data(), eta.data());
            }
        });
    }

    // Mean NLL; when resid is given it receives softmax - onehot.
    double loss(const RowMatrix& eta, RowMatrix* resid) const
    {
        if (resid) {
            resid->resize(n_, classes_);
        }
        const int M = classes_;
        std::vector<double> e(static_cast<std::size_t>(M));
        double total = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double* row = eta.data() + static_cast<std::size_t>(i) * M;
            double top = row[0];
            for (int m = 1; m < M; ++m) {
                top = std::max(top, row[m]);
            }
            double sum_exp = 0.0;
            for (int m = 0; m < M; ++m) {
                e[static_cast<std::size_t>(m)] = std::exp(row[m] - top);
                sum_exp += e[static_cast<std::size_t>(m)];
            }
            const int yi = y_[static_cast<std::size_t>(i)];
            total += top + std::log(sum_exp) - row[yi];
            if (resid) {
                double* r = resid->data() + static_cast<std::size_t>(i) * M;
                const double inv = 1.0 / sum_exp;
                for (int m = 0; m < M; ++m) {
                    r[m] = e[static_cast<std::size_t>(m)] * inv;
                }
                r[yi] -= 1.0;
            }
        }
        return total / n_;
    }

    void gradient(const RowMatrix& resid, Eigen::MatrixXd& g_beta, Eigen::VectorXd& g_b) const
    {
        g_beta.setZero(classes_, cols_);
        g_b = resid.colwise().sum().transpose() / n_;
        with_classes([&](auto fixed) {
            if (binary_) {
                backward<decltype(fixed)::value, true>(resid.data(), g_beta.data());
            } else {
                backward<decltype(fixed)::value, false>(resid.data(), g_beta.data());
            }
        });
        g_beta /= n_;
        g_beta.noalias() -= g_b * mean_.transpose();
    }

    // Largest eigenvalue of [1, Xc]^T [1, Xc] / n by power iteration.
    double gram_spectral_norm() const
    {
        if (cols_ == 0) {
            return 1.0;
        }
        Eigen::VectorXd v(cols_);
        for (int c = 0; c < cols_; ++c) {
            v(c) = 1.0 + 0.5 * std::sin(1.0 + c);
        }
        v.normalize();
        double eig = 0.0;
        Eigen::VectorXd xv(n_);
        for (int iter = 0; iter < 12; ++iter) {
            xv = X_ * v;
            xv.array() -= mean_.dot(v);
            Eigen::VectorXd w = X_.transpose() * xv;
            w -= mean_ * xv.sum();
            w /= n_;
            const double norm = w.norm();
            if (norm == 0.0) {
                break;
            }
            eig = v.dot(w);
            v = w / norm;
        }
        return std::max(1.0, eig);
    }

private:
    // Calls f with std::integral_constant<int, M> for small class counts, 0 otherwise.
    template <class F>
    void with_classes(F&& f) const
    {
        switch (classes_) {
        case 2: f(std::integral_constant<int, 2>{}); break;
        case 3: f(std::integral_constant<int, 3>{}); break;
        case 4: f(std::integral_constant<int, 4>{}); break;
        case 5: f(std::integral_constant<int, 5>{}); break;
        case 6: f(std::integral_constant<int, 6>{}); break;
        case 8: f(std::integral_constant<int, 8>{}); break;
        default: f(std::integral_constant<int, 0>{}); break;
        }
    }

    // eta = base + X beta^T; beta column-major (classes x cols), eta row-major.
    template <int Fixed, bool Binary>
    void forward(const double* beta, const double* base, double* eta) const
    {
        const int M = Fixed > 0 ? Fixed : classes_;
        const int* outer = X_.outerIndexPtr();
        const int* inner = X_.innerIndexPtr();
        const double* values = X_.valuePtr();
        for (int i = 0; i < n_; ++i) {
            double* row = eta + static_cast<std::size_t>(i) * M;
            for (int m = 0; m < M; ++m) {
                row[m] = base[m];
            }
            for (int k = outer[i]; k < outer[i + 1]; ++k) {
                const double* col = beta + static_cast<std::size_t>(inner[k]) * M;
                if constexpr (Binary) {
                    for (int m = 0; m < M; ++m) {
                        row[m] += col[m];
                    }
                } else {
                    const double v = values[k];
                    for (int m = 0; m < M; ++m) {
                        row[m] += v * col[m];
                    }
                }
            }
        }
    }

    // g += X^T resid, laid out like beta.
    template <int Fixed, bool Binary>
    void backward(const double* resid, double* g) const
    {
        const int M = Fixed > 0 ? Fixed : classes_;
        const int* outer = X_.outerIndexPtr();
        const int* inner = X_.innerIndexPtr();
        const double* values = X_.valuePtr();
        for (int i = 0; i < n_; ++i) {
            const double* r = resid + static_cast<std::size_t>(i) * M;
            for (int k = outer[i]; k < outer[i + 1]; ++k) {
                double* col = g + static_cast<std::size_t>(inner[k]) * M;
                if constexpr (Binary) {
                    for (int m = 0; m < M; ++m) {
                        col[m] += r[m];
                    }
                } else {
                    const double v = values[k];
                    for (int m = 0; m < M; ++m) {
                        col[m] += v * r[m];
                    }
                }
            }
        }
    }

    const DesignMatrix::Sparse& X_;
    std::span<const int> y_;
    int n_;
    int cols_;
    int classes_;
    bool binary_ = false;
    Eigen::VectorXd mean_;
};

} // namespace

double nll(const CoefficientTensor& coef, const DesignMatrix& X, std::span<const int> y)
{
    Likelihood lik(X, y, coef.num_classes(), false);
    lik.check_shape(coef.beta, coef.intercepts);
    RowMatrix eta;
    lik.linear_predictor(coef.beta, coef.intercepts, eta);
    return lik.loss(eta, nullptr);
}

NllGradient nll_gradient(const CoefficientTensor& coef, const DesignMatrix& X, std::span<const int> y)
{
    Likelihood lik(X, y, coef.num_classes(), false);
    lik.check_shape(coef.beta, coef.intercepts);
    RowMatrix eta;
    RowMatrix resid;
    lik.linear_predictor(coef.beta, coef.intercepts, eta);
    lik.loss(eta, &resid);
    NllGradient g;
    lik.gradient(resid, g.beta, g.intercepts);
    return g;
}

namespace {

RowMatrix linear_predictor_of(const CoefficientTensor& coef, const DesignMatrix& X)
{
    if (coef.num_columns() != X.cols() || coef.intercepts.size() != coef.num_classes()) {
        throw ValidationError("coefficient width " + std::to_string(coef.num_columns()) +
                              " does not match design width " + std::to_string(X.cols()));
    }
    RowMatrix eta(X.rows(), coef.num_classes());
    const auto& values = X.values();
    for (int i = 0; i < X.rows(); ++i) {
        auto row = eta.row(i);
        row = coef.intercepts.transpose();
        for (DesignMatrix::Sparse::InnerIterator it(values, i); it; ++it) {
            row += it.value() * coef.beta.col(it.col()).transpose();
        }
    }
    return eta;
}

} // namespace

Eigen::MatrixXd class_probabilities(const CoefficientTensor& coef, const DesignMatrix& X)
{
    RowMatrix eta = linear_predictor_of(coef, X);
    Eigen::MatrixXd probs(eta.rows(), eta.cols());
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        const double top = eta.row(i).maxCoeff();
        Eigen::ArrayXd e = (eta.row(i).array() - top).exp().transpose();
        probs.row(i) = (e / e.sum()).matrix().transpose();
    }
    return probs;
}

std::vector<int> predict_classes(const CoefficientTensor& coef, const DesignMatrix& X)
{
    RowMatrix eta = linear_predictor_of(coef, X);
    std::vector<int> out(static_cast<std::size_t>(eta.rows()));
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        int best = 0;
        for (int m = 1; m < eta.cols(); ++m) {
            if (eta(i, m) > eta(i, best)) {
                best = m;
            }
        }
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

double misclassification_rate(std::span<const int> predicted, std::span<const int> truth)
{
    if (predicted.size() != truth.size()) {
        throw ValidationError("prediction and truth lengths differ");
    }
    if (truth.empty()) {
        throw ValidationError("cannot score an empty prediction");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        wrong += predicted[i] != truth[i];
    }
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

namespace {

Eigen::VectorXd null_intercepts(std::span<const int> y, int num_classes)
{
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes);
    for (int c : y) {
        counts(c) += 1.0;
    }
    const double n = static_cast<double>(y.size());
    return counts.unaryExpr([n](double k) { return std::log(std::max(k, 0.5) / n); });
}

} // namespace

FitResult fit_penalized(const DesignMatrix& X,
                        std::span<const int> y,
                        int num_classes,
                        const PenaltySpec& penalty,
                        double lambda,
                        const CoefficientTensor* init,
                        const SolverOptions& options)
{
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be positive and finite");
    }
    penalty.validate(X.cols());
    Likelihood lik(X, y, num_classes, true);
    const Eigen::VectorXd& mean = lik.mean();

    // x: accepted iterate, y: extrapolated point, z: prox-gradient candidate.
    Eigen::MatrixXd beta_x;
    Eigen::VectorXd b_x;
    if (init) {
        lik.check_shape(init->beta, init->intercepts);
        beta_x = init->beta;
        b_x = init->intercepts + init->beta * mean;
    } else {
        beta_x = Eigen::MatrixXd::Zero(num_classes, X.cols());
        b_x = null_intercepts(y, num_classes);
    }

    RowMatrix eta_x;
    lik.linear_predictor(beta_x, b_x, eta_x);
    double f_x = lik.loss(eta_x, nullptr);
    double obj_x = f_x + lambda * penalty_value(beta_x, penalty);
    if (!std::isfinite(obj_x)) {
        throw NumericalError("objective is not finite at the starting point");
    }

    Eigen::MatrixXd beta_prev = beta_x;
    Eigen::VectorXd b_prev = b_x;
    RowMatrix eta_prev = eta_x;
    Eigen::MatrixXd beta_y = beta_x;
    Eigen::VectorXd b_y = b_x;
    RowMatrix eta_y = eta_x;

    Eigen::MatrixXd g_beta;
    Eigen::VectorXd g_b;
    RowMatrix resid;
    RowMatrix eta_z;

    double lipschitz = 0.25 * lik.gram_spectral_norm();
    double theta = 1.0;

    FitResult result;
    result.lambda = lambda;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        // let the step grow back when the local curvature is smaller
        lipschitz = std::max(lipschitz * 0.7, 1e-12);
        const double f_y = lik.loss(eta_y, &resid);
        lik.gradient(resid, g_beta, g_b);

        Eigen::MatrixXd beta_z;
        Eigen::VectorXd b_z;
        double f_z = 0.0;
        for (;;) {
            const double step = 1.0 / lipschitz;
            beta_z = prox_penalty(beta_y - step * g_beta, step * lambda, penalty);
            b_z = b_y - step * g_b;
            lik.linear_predictor(beta_z, b_z, eta_z);
            f_z = lik.loss(eta_z, nullptr);
            const double d_norm2 = (beta_z - beta_y).squaredNorm() + (b_z - b_y).squaredNorm();
            const double model = f_y + (g_beta.cwiseProduct(beta_z - beta_y)).sum() + g_b.dot(b_z - b_y) +
                                 0.5 * lipschitz * d_norm2;
            if (std::isfinite(f_z) && f_z <= model + 1e-13 * std::max(1.0, std::abs(f_y))) {
                break;
            }
            lipschitz *= 2.0;
            if (lipschitz > 1e30) {
                throw NumericalError("backtracking failed to find a descent step at lambda=" +
                                     std::to_string(lambda) + "; raise the lambda floor");
            }
        }

        const double obj_z = f_z + lambda * penalty_value(beta_z, penalty);
        if (!std::isfinite(obj_z)) {
            throw NumericalError("objective overflowed at lambda=" + std::to_string(lambda) +
                                 "; raise the lambda floor");
        }

        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        if (obj_z <= obj_x) {
            const double change = (obj_x - obj_z) / std::max(obj_z, std::numeric_limits<double>::min());
            // gradient-based restart: the step points against the momentum
            const bool restart =
                ((beta_y - beta_z).cwiseProduct(beta_z - beta_x)).sum() + (b_y - b_z).dot(b_z - b_x) > 0.0;
            beta_prev.swap(beta_x);
            b_prev.swap(b_x);
            eta_prev.swap(eta_x);
            beta_x = std::move(beta_z);
            b_x = std::move(b_z);
            eta_x = eta_z;
            obj_x = obj_z;
            if (options.record_trace) {
                result.trace.push_back(obj_x);
            }
            if (change < options.tolerance) {
                result.converged = true;
                ++iter;
                break;
            }
            if (restart) {
                theta = 1.0;
                beta_y = beta_x;
                b_y = b_x;
                eta_y = eta_x;
            } else {
                const double w = (theta - 1.0) / theta_next;
                beta_y = beta_x + w * (beta_x - beta_prev);
                b_y = b_x + w * (b_x - b_prev);
                eta_y = eta_x + w * (eta_x - eta_prev);
                theta = theta_next;
            }
        } else {
            // rejected candidate: restart momentum from the current iterate
            if (options.record_trace) {
                result.trace.push_back(obj_x);
            }
            theta = 1.0;
            beta_y = beta_x;
            b_y = b_x;
            eta_y = eta_x;
        }
    }

    result.iterations = iter;
    result.objective = obj_x;
    result.coef.beta = std::move(beta_x);
    result.coef.intercepts = b_x - result.coef.beta * mean;
    return result;
}

namespace {

// Gradient of the penalised block at beta = 0 with intercepts at the null fit.
Eigen::MatrixXd null_gradient(const DesignMatrix& X, std::span<const int> y, int num_classes)
{
    Likelihood lik(X, y, num_classes, true);
    std::vector<char> present(static_cast<std::size_t>(num_classes), 0);
    for (int c : y) {
        present[static_cast<std::size_t>(c)] = 1;
    }
    if (std::count(present.begin(), present.end(), 1) < 2) {
        throw ValidationError("outcome has a single class; nothing to discriminate");
    }
    RowMatrix eta;
    RowMatrix resid;
    Eigen::MatrixXd g_beta;
    Eigen::VectorXd g_b;
    lik.linear_predictor(Eigen::MatrixXd::Zero(num_classes, X.cols()), null_intercepts(y, num_classes), eta);
    lik.loss(eta, &resid);
    lik.gradient(resid, g_beta, g_b);
    return g_beta;
}

// Smallest lambda with || S(g, lambda * alpha) ||_2 <= lambda * (1 - alpha) * w.
template <class Block>
double sparse_group_threshold(const Block& g, double alpha, double w)
{
    const double inf_norm = g.cwiseAbs().maxCoeff();
    if (alpha >= 1.0) {
        return inf_norm;
    }
    if (alpha <= 0.0) {
        return g.norm() / w;
    }
    auto feasible = [&](double lam) {
        const double t = lam * alpha;
        const double shrunk = g.unaryExpr([t](double x) { return std::max(std::abs(x) - t, 0.0); }).norm();
        return shrunk <= lam * (1.0 - alpha) * w;
    };
    double lo = 0.0;
    double hi = inf_norm / alpha;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

} // namespace

double lambda_max(const DesignMatrix& X, std::span<const int> y, int num_classes, const PenaltySpec& penalty)
{
    penalty.validate(X.cols());
    const Eigen::MatrixXd g = null_gradient(X, y, num_classes);
    if (g.size() == 0) {
        return 0.0;
    }
    double best = 0.0;
    if (penalty.kind == PenaltyKind::lasso) {
        best = g.cwiseAbs().maxCoeff();
    } else {
        const double alpha = penalty.kind == PenaltyKind::group ? 0.0 : penalty.alpha;
        for (const auto& grp : penalty.groups) {
            const double w = group_weight(grp, num_classes, penalty.scope);
            if (penalty.scope == GroupScope::across_classes) {
                best = std::max(best, sparse_group_threshold(g.middleCols(grp.begin, grp.size), alpha, w));
            } else {
                for (int m = 0; m < num_classes; ++m) {
                    best = std::max(best, sparse_group_threshold(g.row(m).segment(grp.begin, grp.size), alpha, w));
                }
            }
        }
    }
    // absorb rounding in the prox comparisons
    return best * (1.0 + 1e-10);
}

std::vector<double> lambda_grid(const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const PenaltySpec& penalty,
                                int count,
                                double ratio)
{
    if (count < 2) {
        throw ValidationError("lambda grid needs at least 2 points");
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw ValidationError("lambda ratio must lie in (0, 1)");
    }
    const double top = lambda_max(X, y, num_classes, penalty);
    if (!(top > 0.0)) {
        throw ValidationError("lambda_max is zero: the design carries no signal to penalise");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double log_top = std::log(top);
    const double log_ratio = std::log(ratio);
    for (int k = 0; k < count; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(log_top + log_ratio * k / (count - 1));
    }
    grid.front() = top;
    return grid;
}

std::vector<int> stratified_folds(std::span<const int> y, int num_classes, int folds, std::uint64_t seed)
{
    if (folds < 2) {
        throw ValidationError("need at least 2 folds");
    }
    std::vector<std::vector<int>> members(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= num_classes) {
            throw ValidationError("class index out of range");
        }
        members[static_cast<std::size_t>(y[i])].push_back(static_cast<int>(i));
    }
    for (int m = 0; m < num_classes; ++m) {
        const auto size = members[static_cast<std::size_t>(m)].size();
        if (size < static_cast<std::size_t>(folds)) {
            throw ValidationError("class " + std::to_string(m) + " has " + std::to_string(size) +
                                  " members, fewer than " + std::to_string(folds) + " folds");
        }
    }
    Rng rng(seed);
    std::vector<int> fold(y.size(), -1);
    int offset = 0;
    for (auto& idx : members) {
        rng.shuffle(idx);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            fold[static_cast<std::size_t>(idx[r])] = static_cast<int>((r + static_cast<std::size_t>(offset)) % folds);
        }
        // continue dealing where the previous class stopped to balance fold sizes
        offset = static_cast<int>((idx.size() + static_cast<std::size_t>(offset)) % folds);
    }
    return fold;
}

CVResult cross_validate(const DesignMatrix& X,
                        std::span<const int> y,
                        int num_classes,
                        const PenaltySpec& penalty,
                        const std::vector<double>& lambdas,
                        const CvOptions& options)
{
    if (lambdas.empty()) {
        throw ValidationError("lambda grid is empty");
    }
    for (std::size_t k = 1; k < lambdas.size(); ++k) {
        if (!(lambdas[k] < lambdas[k - 1])) {
            throw ValidationError("lambda grid must be strictly decreasing");
        }
    }
    CVResult cv;
    cv.lambdas = lambdas;
    cv.fold_of_row = stratified_folds(y, num_classes, options.folds, options.seed);
    const int folds = options.folds;
    const auto count = lambdas.size();
    cv.fold_accuracy = Eigen::MatrixXd::Zero(folds, static_cast<Eigen::Index>(count));

    parallel_for(0, static_cast<std::size_t>(folds), [&](std::size_t f) {
        std::vector<int> train;
        std::vector<int> test;
        for (std::size_t i = 0; i < y.size(); ++i) {
            (cv.fold_of_row[i] == static_cast<int>(f) ? test : train).push_back(static_cast<int>(i));
        }
        const DesignMatrix X_train = X.select_rows(train);
        const DesignMatrix X_test = X.select_rows(test);
        std::vector<int> y_train(train.size());
        std::vector<int> y_test(test.size());
        for (std::size_t r = 0; r < train.size(); ++r) {
            y_train[r] = y[static_cast<std::size_t>(train[r])];
        }
        for (std::size_t r = 0; r < test.size(); ++r) {
            y_test[r] = y[static_cast<std::size_t>(test[r])];
        }
        std::optional<CoefficientTensor> warm;
        for (std::size_t k = 0; k < count; ++k) {
            FitResult fit = fit_penalized(X_train, y_train, num_classes, penalty, lambdas[k],
                                          warm ? &*warm : nullptr, options.solver);
            const auto pred = predict_classes(fit.coef, X_test);
            cv.fold_accuracy(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) =
                1.0 - misclassification_rate(pred, y_test);
            warm = std::move(fit.coef);
        }
    });

    cv.mean_accuracy.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        cv.mean_accuracy[k] = cv.fold_accuracy.col(static_cast<Eigen::Index>(k)).mean();
    }
    cv.best_index = 0;
    for (std::size_t k = 1; k < count; ++k) {
        if (cv.mean_accuracy[k] > cv.mean_accuracy[static_cast<std::size_t>(cv.best_index)]) {
            cv.best_index = static_cast<int>(k);
        }
    }
    cv.best_lambda = lambdas[static_cast<std::size_t>(cv.best_index)];

    std::optional<CoefficientTensor> warm;
    for (int k = 0; k <= cv.best_index; ++k) {
        FitResult fit = fit_penalized(X, y, num_classes, penalty, lambdas[static_cast<std::size_t>(k)],
                                      warm ? &*warm : nullptr, options.solver);
        warm = fit.coef;
        cv.path.push_back(std::move(fit));
    }
    cv.refit = cv.path.back();
    return cv;
}

std::string format_coefficients_csv(const CoefficientTensor& coef,
                                    const DesignMatrix& X,
                                    const std::vector<std::string>& class_labels,
                                    const std::vector<std::string>& position_names,
                                    const StateAlphabet& alphabet)
{
    std::ostringstream out;
    out.precision(17);
    out << "class,position,state,value\n";
    for (int m = 0; m < coef.num_classes(); ++m) {
        for (int c = 0; c < coef.num_columns(); ++c) {
            const double v = coef.beta(m, c);
            if (v == 0.0) {
                continue;
            }
            const auto& key = X.columns()[static_cast<std::size_t>(c)];
            out << class_labels.at(static_cast<std::size_t>(m)) << ','
                << position_names.at(static_cast<std::size_t>(key.position)) << ',' << alphabet.label(key.state) << ','
                << v << '\n';
        }
    }
    for (int m = 0; m < coef.num_classes(); ++m) {
        out << class_labels.at(static_cast<std::size_t>(m)) << ",intercept,," << coef.intercepts(m) << '\n';
    }
    return out.str();
}

std::string format_cv_csv(const CVResult& cv)
{
    std::ostringstream out;
    out.precision(17);
    out << "lambda,mean_accuracy";
    for (Eigen::Index f = 0; f < cv.fold_accuracy.rows(); ++f) {
        out << ",fold_" << f + 1;
    }
    out << '\n';
    for (std::size_t k = 0; k < cv.lambdas.size(); ++k) {
        out << cv.lambdas[k] << ',' << cv.mean_accuracy[k];
        for (Eigen::Index f = 0; f < cv.fold_accuracy.rows(); ++f) {
            out << ',' << cv.fold_accuracy(f, static_cast<Eigen::Index>(k));
        }
        out << '\n';
    }
    return out.str();
}

} // namespace seqsel
