#include <seqsel/synth.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>
#include <seqsel/rng.hpp>
#include <seqsel/select.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <Eigen/Dense>
#include <json.hpp>

namespace seqsel {

namespace {

void check_simplex(const std::vector<double>& probs, std::size_t expected, const std::string& what)
{
    if (probs.size() != expected) {
        throw ValidationError(what + " has " + std::to_string(probs.size()) + " entries, expected " +
                              std::to_string(expected));
    }
    double total = 0.0;
    for (double v : probs) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError(what + " has a negative or non-finite entry");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError(what + " sums to " + std::to_string(total) + ", not 1");
    }
}

std::string padded(const char* prefix, int value, int width)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%s%0*d", prefix, width, value);
    return buffer;
}

int digits(int value) { return value < 10 ? 1 : 1 + digits(value / 10); }

} // namespace

SynthSpec SynthSpec::benchmark()
{
    SynthSpec spec;
    spec.n = 600;
    spec.p = 60;
    spec.q = 4;
    spec.num_classes = 3;
    spec.informative = {5, 14, 23, 32, 41, 50};
    spec.markov_persistence = 0.6;
    // with persistence 0.6 all six planted states are copies in 0.6^6 of the
    // rows; a majority class keeps the unavoidable error of those rows low
    spec.class_probs = {0.5, 0.25, 0.25};
    // copied background states sometimes mimic a class state; this is what
    // makes neighbouring positions useful to a linear model
    spec.theta_background = {0.07, 0.07, 0.07, 0.79};
    spec.theta_informative.assign(3, {});
    for (int m = 0; m < 3; ++m) {
        for (std::size_t idx = 0; idx < spec.informative.size(); ++idx) {
            std::vector<double> theta(4, 0.0);
            theta[static_cast<std::size_t>(m)] = 1.0;
            spec.theta_informative[static_cast<std::size_t>(m)].push_back(theta);
        }
    }
    spec.seed = 0;
    return spec;
}

void SynthSpec::validate() const
{
    if (n < 1 || p < 1) {
        throw ValidationError("synthetic spec needs n >= 1 and p >= 1");
    }
    if (q < 2 || q > 65535) {
        throw ValidationError("synthetic spec needs 2 <= q <= 65535");
    }
    if (num_classes < 1) {
        throw ValidationError("synthetic spec needs at least one class");
    }
    if (!(markov_persistence >= 0.0 && markov_persistence < 1.0)) {
        throw ValidationError("markov_persistence must lie in [0, 1)");
    }
    std::set<int> seen;
    for (int j : informative) {
        if (j < 0 || j >= p) {
            throw ValidationError("informative position " + std::to_string(j) + " outside 0.." + std::to_string(p - 1));
        }
        if (!seen.insert(j).second) {
            throw ValidationError("informative position " + std::to_string(j) + " listed twice");
        }
    }
    check_simplex(class_probs, static_cast<std::size_t>(num_classes), "class_probs");
    check_simplex(theta_background, static_cast<std::size_t>(q), "theta_background");
    if (theta_informative.size() != static_cast<std::size_t>(num_classes)) {
        throw ValidationError("theta_informative must have one entry per class");
    }
    for (std::size_t m = 0; m < theta_informative.size(); ++m) {
        if (theta_informative[m].size() != informative.size()) {
            throw ValidationError("theta_informative[" + std::to_string(m) +
                                  "] must have one vector per informative position");
        }
        for (std::size_t idx = 0; idx < informative.size(); ++idx) {
            check_simplex(theta_informative[m][idx], static_cast<std::size_t>(q),
                          "theta_informative[" + std::to_string(m) + "][" + std::to_string(idx) + "]");
        }
    }
}

std::string SynthSpec::to_json() const
{
    nlohmann::ordered_json j;
    j["n"] = n;
    j["p"] = p;
    j["q"] = q;
    j["num_classes"] = num_classes;
    j["informative"] = informative;
    j["theta_informative"] = theta_informative;
    j["theta_background"] = theta_background;
    j["markov_persistence"] = markov_persistence;
    j["class_probs"] = class_probs;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

SynthSpec SynthSpec::from_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("synthetic spec is not valid JSON: ") + e.what());
    }
    SynthSpec spec = benchmark();
    try {
        spec.n = j.value("n", spec.n);
        spec.p = j.value("p", spec.p);
        spec.q = j.value("q", spec.q);
        spec.num_classes = j.value("num_classes", j.value("M", spec.num_classes));
        spec.informative = j.value("informative", spec.informative);
        spec.theta_informative = j.value("theta_informative", spec.theta_informative);
        spec.theta_background = j.value("theta_background", spec.theta_background);
        spec.markov_persistence = j.value("markov_persistence", spec.markov_persistence);
        spec.class_probs = j.value("class_probs", spec.class_probs);
        spec.seed = j.value("seed", spec.seed);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("synthetic spec has a field of the wrong type: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string GroundTruth::to_json(const SequenceDataset& ds) const
{
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["synthetic"] = true;
    j["informative"] = informative;
    std::vector<std::string> names;
    for (int pos : informative) {
        names.push_back(ds.position_names()[static_cast<std::size_t>(pos)]);
    }
    j["informative_names"] = names;
    j["theta_informative"] = theta_informative;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        rows.push_back({{"id", ds.ids()[i]}, {"class", ds.outcome()->labels[static_cast<std::size_t>(labels[i])]}});
    }
    j["labels"] = rows;
    return j.dump(2) + "\n";
}

std::pair<SequenceDataset, GroundTruth> generate(const SynthSpec& spec)
{
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.n);
    const auto p = static_cast<std::size_t>(spec.p);

    std::vector<int> informative_index(p, -1);
    for (std::size_t idx = 0; idx < spec.informative.size(); ++idx) {
        informative_index[static_cast<std::size_t>(spec.informative[idx])] = static_cast<int>(idx);
    }

    std::vector<StateIndex> states(n * p);
    std::vector<int> labels(n);
    parallel_for(0, n, [&](std::size_t i) {
        Rng rng(derive_seed(spec.seed, i));
        const int m = rng.categorical(spec.class_probs);
        labels[i] = m;
        for (std::size_t j = 0; j < p; ++j) {
            const bool copy = j > 0 && rng.uniform() < spec.markov_persistence;
            const int idx = informative_index[j];
            // always consume the draw so the stream layout does not depend on the coin
            const auto& theta = idx >= 0 ? spec.theta_informative[static_cast<std::size_t>(m)][static_cast<std::size_t>(idx)]
                                         : spec.theta_background;
            const int fresh = rng.categorical(theta);
            states[i * p + j] = copy ? states[i * p + j - 1] : static_cast<StateIndex>(fresh);
        }
    });

    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = padded("seq", static_cast<int>(i + 1), std::max(4, digits(spec.n)));
    }
    std::vector<std::string> positions(p);
    for (std::size_t j = 0; j < p; ++j) {
        positions[j] = padded("t", static_cast<int>(j + 1), digits(spec.p));
    }
    std::vector<std::string> state_labels(static_cast<std::size_t>(spec.q));
    for (int k = 0; k < spec.q; ++k) {
        state_labels[static_cast<std::size_t>(k)] = padded("s", k, digits(spec.q - 1));
    }

    Outcome outcome;
    for (int m = 0; m < spec.num_classes; ++m) {
        outcome.labels.push_back(std::to_string(m + 1));
    }
    // classes with no draws are dropped so every class index is used
    std::vector<int> used(static_cast<std::size_t>(spec.num_classes), 0);
    for (int m : labels) {
        used[static_cast<std::size_t>(m)] = 1;
    }
    std::vector<int> compact(static_cast<std::size_t>(spec.num_classes), -1);
    std::vector<std::string> kept_labels;
    for (int m = 0; m < spec.num_classes; ++m) {
        if (used[static_cast<std::size_t>(m)]) {
            compact[static_cast<std::size_t>(m)] = static_cast<int>(kept_labels.size());
            kept_labels.push_back(outcome.labels[static_cast<std::size_t>(m)]);
        }
    }
    outcome.labels = kept_labels;
    for (int m : labels) {
        outcome.classes.push_back(compact[static_cast<std::size_t>(m)]);
    }

    GroundTruth truth;
    truth.informative = spec.informative;
    std::sort(truth.informative.begin(), truth.informative.end());
    truth.labels = outcome.classes;
    truth.theta_informative = spec.theta_informative;

    SequenceDataset ds(std::move(ids), std::move(positions), StateAlphabet(std::move(state_labels)),
                       std::move(states), std::move(outcome));
    return {std::move(ds), std::move(truth)};
}

IrrepresentabilityResult irrepresentability_stat(const DesignMatrix& X,
                                                 std::span<const int> support,
                                                 std::span<const int> signs,
                                                 bool allow_ridge)
{
    if (support.empty()) {
        throw ValidationError("support must contain at least one column");
    }
    if (signs.size() != support.size()) {
        throw ValidationError("need one sign per support column");
    }
    std::vector<char> in_support(static_cast<std::size_t>(X.cols()), 0);
    for (int c : support) {
        if (c < 0 || c >= X.cols()) {
            throw ValidationError("support column " + std::to_string(c) + " out of range");
        }
        if (in_support[static_cast<std::size_t>(c)]) {
            throw ValidationError("support column " + std::to_string(c) + " listed twice");
        }
        in_support[static_cast<std::size_t>(c)] = 1;
    }
    for (int s : signs) {
        if (s != 1 && s != -1) {
            throw ValidationError("signs must be +1 or -1");
        }
    }

    const Eigen::MatrixXd dense = Eigen::MatrixXd(X.values());
    Eigen::MatrixXd x1(dense.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
        x1.col(static_cast<Eigen::Index>(s)) = dense.col(support[s]);
    }
    Eigen::VectorXd sign(static_cast<Eigen::Index>(signs.size()));
    for (std::size_t s = 0; s < signs.size(); ++s) {
        sign(static_cast<Eigen::Index>(s)) = signs[s];
    }

    IrrepresentabilityResult out;
    Eigen::MatrixXd gram = x1.transpose() * x1;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x1);
    if (qr.rank() < x1.cols()) {
        if (!allow_ridge) {
            throw ValidationError("support columns are rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                                  std::to_string(x1.cols()) + "); use the ridge-stabilised variant");
        }
        gram.diagonal().array() += 1e-8;
        out.ridge_stabilized = true;
    }
    const Eigen::VectorXd w = gram.ldlt().solve(sign);
    const Eigen::VectorXd fitted = x1 * w;
    out.per_column.assign(static_cast<std::size_t>(X.cols()), 0.0);
    for (int c = 0; c < X.cols(); ++c) {
        if (in_support[static_cast<std::size_t>(c)]) {
            continue;
        }
        const double v = std::abs(dense.col(c).dot(fitted));
        out.per_column[static_cast<std::size_t>(c)] = v;
        out.value = std::max(out.value, v);
    }
    return out;
}

std::vector<double> irrepresentability_by_position(const DesignMatrix& X, const IrrepresentabilityResult& result)
{
    std::vector<double> out(static_cast<std::size_t>(X.num_positions()), 0.0);
    for (int c = 0; c < X.cols(); ++c) {
        const int j = X.columns()[static_cast<std::size_t>(c)].position;
        out[static_cast<std::size_t>(j)] =
            std::max(out[static_cast<std::size_t>(j)], result.per_column[static_cast<std::size_t>(c)]);
    }
    return out;
}

SelectionScore score_selection(const PositionSet& selected, const GroundTruth& truth)
{
    SelectionScore score;
    int hits = 0;
    for (int j : truth.informative) {
        hits += selected.contains(j);
    }
    const double informative = static_cast<double>(truth.informative.size());
    score.recall = informative > 0 ? hits / informative : 0.0;
    if (!selected.positions.empty()) {
        score.precision = static_cast<double>(hits) / selected.size();
    }
    score.overselection = informative > 0 ? selected.size() / informative : 0.0;
    return score;
}

} // namespace seqsel
