#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include <seqsel/seqdata.hpp>

namespace seqsel {

/// Multinomial coefficients: one row of `beta` per outcome class, one column
/// per design column, plus unpenalised per-class intercepts.
struct CoefficientTensor
{
    Eigen::MatrixXd beta;
    Eigen::VectorXd intercepts;

    static CoefficientTensor zeros(int num_classes, int num_columns);

    int num_classes() const { return static_cast<int>(beta.rows()); }
    int num_columns() const { return static_cast<int>(beta.cols()); }
};

enum class PenaltyKind
{
    lasso,
    group,
    sparse_group
};

/// How position groups are laid over the coefficient matrix.
///   across_classes: one block per position spanning all classes, weight sqrt(M * s_j)
///   per_class:      one block per (class, position), weight sqrt(s_j)
enum class GroupScope
{
    across_classes,
    per_class
};

struct PenaltySpec
{
    PenaltyKind kind = PenaltyKind::lasso;
    double alpha = 0.5; // l1 share of the sparse-group penalty
    GroupScope scope = GroupScope::across_classes;
    std::vector<PositionGroup> groups;

    static PenaltySpec lasso();
    static PenaltySpec group(const DesignMatrix& X, GroupScope scope = GroupScope::across_classes);
    static PenaltySpec sparse_group(const DesignMatrix& X,
                                    double alpha,
                                    GroupScope scope = GroupScope::across_classes);

    /// Same kind and mixing, groups taken from another design.
    PenaltySpec rebind(const DesignMatrix& X) const;

    void validate(int num_columns) const;
};

const char* to_string(PenaltyKind kind);
PenaltyKind parse_penalty_kind(std::string_view name);

double group_weight(const PositionGroup& group, int num_classes, GroupScope scope);

Eigen::MatrixXd prox_l1(const Eigen::MatrixXd& v, double t);
Eigen::MatrixXd prox_group(const Eigen::MatrixXd& v,
                           double t,
                           std::span<const PositionGroup> groups,
                           GroupScope scope = GroupScope::across_classes);
Eigen::MatrixXd prox_sparse_group(const Eigen::MatrixXd& v,
                                  double t,
                                  double alpha,
                                  std::span<const PositionGroup> groups,
                                  GroupScope scope = GroupScope::across_classes);
/// Dispatches on the penalty kind.
Eigen::MatrixXd prox_penalty(const Eigen::MatrixXd& v, double t, const PenaltySpec& penalty);

/// Unscaled penalty value (multiply by lambda for the objective term).
double penalty_value(const Eigen::MatrixXd& beta, const PenaltySpec& penalty);

/// Mean multinomial negative log-likelihood:
/// (1/n) sum_i [ log sum_m exp(eta_im) - eta_{i,y_i} ].
double nll(const CoefficientTensor& coef, const DesignMatrix& X, std::span<const int> y);

struct NllGradient
{
    Eigen::MatrixXd beta;
    Eigen::VectorXd intercepts;
};

NllGradient nll_gradient(const CoefficientTensor& coef, const DesignMatrix& X, std::span<const int> y);

/// Softmax class probabilities, one row per sequence.
Eigen::MatrixXd class_probabilities(const CoefficientTensor& coef, const DesignMatrix& X);

/// argmax_m eta_im, ties to the smallest class index.
std::vector<int> predict_classes(const CoefficientTensor& coef, const DesignMatrix& X);

double misclassification_rate(std::span<const int> predicted, std::span<const int> truth);

struct SolverOptions
{
    double tolerance = 1e-7; // relative objective change
    int max_iterations = 10000;
    bool record_trace = false;
};

struct FitResult
{
    double lambda = 0.0;
    CoefficientTensor coef;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace; // objective after each iteration, when requested
};

/// Minimises nll + lambda * penalty by monotone accelerated proximal gradient
/// with backtracking. Throws NumericalError if the objective overflows.
FitResult fit_penalized(const DesignMatrix& X,
                        std::span<const int> y,
                        int num_classes,
                        const PenaltySpec& penalty,
                        double lambda,
                        const CoefficientTensor* init = nullptr,
                        const SolverOptions& options = {});

/// Smallest lambda at which every penalised coefficient is zero.
double lambda_max(const DesignMatrix& X, std::span<const int> y, int num_classes, const PenaltySpec& penalty);

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(const DesignMatrix& X,
                                std::span<const int> y,
                                int num_classes,
                                const PenaltySpec& penalty,
                                int count = 100,
                                double ratio = 1e-4);

/// Fold id per row. Each class is shuffled and dealt round-robin.
std::vector<int> stratified_folds(std::span<const int> y, int num_classes, int folds, std::uint64_t seed);

struct CvOptions
{
    int folds = 10;
    std::uint64_t seed = 0;
    SolverOptions solver;
};

struct CVResult
{
    std::vector<double> lambdas;
    std::vector<double> mean_accuracy;
    Eigen::MatrixXd fold_accuracy; // folds x lambdas
    std::vector<int> fold_of_row;
    int best_index = 0;
    double best_lambda = 0.0;
    FitResult refit;
    /// fits on the full data for lambdas[0..best_index], warm-started
    std::vector<FitResult> path;

    double best_accuracy() const { return mean_accuracy[static_cast<std::size_t>(best_index)]; }
};

/// Stratified K-fold CV over a descending lambda grid, scored by accuracy.
/// Ties in mean accuracy go to the larger lambda.
CVResult cross_validate(const DesignMatrix& X,
                        std::span<const int> y,
                        int num_classes,
                        const PenaltySpec& penalty,
                        const std::vector<double>& lambdas,
                        const CvOptions& options = {});

/// CSV `class,position,state,value` with zeros omitted, then one
/// `class,intercept,,value` row per class.
std::string format_coefficients_csv(const CoefficientTensor& coef,
                                    const DesignMatrix& X,
                                    const std::vector<std::string>& class_labels,
                                    const std::vector<std::string>& position_names,
                                    const StateAlphabet& alphabet);

/// CSV `lambda,mean_accuracy,fold_1..fold_K`.
std::string format_cv_csv(const CVResult& cv);

} // namespace seqsel
