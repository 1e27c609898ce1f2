#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <seqsel/penreg.hpp>
#include <seqsel/seqdata.hpp>

namespace seqsel {

struct PositionSet;

/// Generative model for synthetic labelled sequences with planted signal.
///
/// Each sequence draws its class from `class_probs`. Positions are filled left
/// to right: with probability `markov_persistence` the previous state is
/// copied, otherwise a state is drawn from the class-specific distribution at
/// informative positions or from `theta_background` elsewhere. The first
/// position is always a fresh draw.
struct SynthSpec
{
    int n = 600;
    int p = 60;
    int q = 4;
    int num_classes = 3;
    std::vector<int> informative;
    /// [class][index into informative][state]
    std::vector<std::vector<std::vector<double>>> theta_informative;
    std::vector<double> theta_background;
    double markov_persistence = 0.0;
    std::vector<double> class_probs;
    std::uint64_t seed = 0;

    /// n=600, p=60, q=4, M=3, six informative positions, persistence 0.6.
    static SynthSpec benchmark();

    void validate() const;

    std::string to_json() const;
    static SynthSpec from_json(std::string_view text);
};

struct GroundTruth
{
    std::vector<int> informative;
    std::vector<int> labels;
    std::vector<std::vector<std::vector<double>>> theta_informative;

    std::string to_json(const SequenceDataset& ds) const;
};

std::pair<SequenceDataset, GroundTruth> generate(const SynthSpec& spec);

struct IrrepresentabilityResult
{
    double value = 0.0;
    bool ridge_stabilized = false;
    /// |X2^T X1 (X1^T X1)^{-1} s| per design column; zero for support columns
    std::vector<double> per_column;
};

/// || X2^T X1 (X1^T X1)^{-1} sign ||_inf for the given support columns.
/// Throws ValidationError when X1 is rank deficient unless allow_ridge, in
/// which case 1e-8 is added to the Gram diagonal and the result is flagged.
IrrepresentabilityResult irrepresentability_stat(const DesignMatrix& X,
                                                 std::span<const int> support,
                                                 std::span<const int> signs,
                                                 bool allow_ridge = false);

/// Per-position maximum of the column statistic, for positions outside the support.
std::vector<double> irrepresentability_by_position(const DesignMatrix& X, const IrrepresentabilityResult& result);

struct SelectionScore
{
    double recall = 0.0;
    std::optional<double> precision; // undefined for an empty selection
    double overselection = 0.0;
};

SelectionScore score_selection(const PositionSet& selected, const GroundTruth& truth);

} // namespace seqsel
