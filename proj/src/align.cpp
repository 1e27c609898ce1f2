#include <seqsel/align.hpp>

#include <seqsel/error.hpp>
#include <seqsel/parallel.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace seqsel {

CostScheme::CostScheme(Eigen::MatrixXd substitution, double indel)
    : substitution_(std::move(substitution)), indel_(indel)
{
    if (substitution_.rows() != substitution_.cols() || substitution_.rows() < 1) {
        throw ValidationError("substitution matrix must be square and nonempty");
    }
    if (!(indel_ > 0.0) || !std::isfinite(indel_)) {
        throw ValidationError("indel cost must be positive and finite");
    }
    for (Eigen::Index a = 0; a < substitution_.rows(); ++a) {
        if (substitution_(a, a) != 0.0) {
            throw ValidationError("substitution matrix must have a zero diagonal");
        }
        for (Eigen::Index b = 0; b < substitution_.cols(); ++b) {
            const double v = substitution_(a, b);
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError("substitution costs must be finite and nonnegative");
            }
            if (v != substitution_(b, a)) {
                throw ValidationError("substitution matrix must be symmetric");
            }
        }
    }
}

CostScheme CostScheme::constant(int num_states, double substitution, double indel)
{
    Eigen::MatrixXd sub = Eigen::MatrixXd::Constant(num_states, num_states, substitution);
    sub.diagonal().setZero();
    return CostScheme(std::move(sub), indel);
}

double om_distance(std::span<const StateIndex> a, std::span<const StateIndex> b, const CostScheme& costs)
{
    const int q = costs.num_states();
    for (StateIndex s : a) {
        if (s >= q) {
            throw ValidationError("state index " + std::to_string(s) + " outside cost scheme alphabet");
        }
    }
    for (StateIndex s : b) {
        if (s >= q) {
            throw ValidationError("state index " + std::to_string(s) + " outside cost scheme alphabet");
        }
    }

    const double indel = costs.indel();
    const Eigen::MatrixXd& sub = costs.substitution_matrix();
    // prev[j] = cost(a[0..i), b[0..j)), rolled over i.
    std::vector<double> prev(b.size() + 1);
    std::vector<double> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) {
        prev[j] = indel * static_cast<double>(j);
    }
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = indel * static_cast<double>(i);
        const StateIndex ai = a[i - 1];
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const double match = prev[j - 1] + sub(ai, b[j - 1]);
            const double gap = std::min(prev[j], cur[j - 1]) + indel;
            cur[j] = std::min(match, gap);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

DistanceMatrix::DistanceMatrix(int n) : n_(n), lower_(n > 1 ? static_cast<std::size_t>(n) * (n - 1) / 2 : 0, 0.0)
{
    if (n < 0) {
        throw ValidationError("distance matrix size must be nonnegative");
    }
}

DistanceMatrix::DistanceMatrix(int n, std::vector<double> lower) : n_(n), lower_(std::move(lower))
{
    if (n < 0 || lower_.size() != (n > 1 ? static_cast<std::size_t>(n) * (n - 1) / 2 : 0)) {
        throw ValidationError("lower triangle length does not match n");
    }
    for (double v : lower_) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("distances must be finite and nonnegative");
        }
    }
}

void DistanceMatrix::set(int i, int j, double value)
{
    if (i == j) {
        if (value != 0.0) {
            throw ValidationError("distance matrix diagonal must be zero");
        }
        return;
    }
    if (!std::isfinite(value) || value < 0.0) {
        throw ValidationError("distances must be finite and nonnegative");
    }
    if (i < j) {
        std::swap(i, j);
    }
    lower_[index(i, j)] = value;
}

namespace {

constexpr std::array<char, 4> kMagic{'O', 'M', 'D', '1'};

template <class T>
void write_le(std::ofstream& out, T value)
{
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_le(std::ifstream& in)
{
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw FormatError("truncated distance file");
    }
    if constexpr (std::endian::native == std::endian::big) {
        std::reverse(bytes.begin(), bytes.end());
    }
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace

void DistanceMatrix::write_binary(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(n_));
    for (double v : lower_) {
        write_le<double>(out, v);
    }
}

DistanceMatrix DistanceMatrix::read_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path.string() + "'");
    }
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw FormatError("'" + path.string() + "' is not an OMD1 distance file");
    }
    const auto n = read_le<std::uint64_t>(in);
    if (n > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
        throw FormatError("distance file declares an implausible size");
    }
    const std::size_t count = n > 1 ? static_cast<std::size_t>(n) * (n - 1) / 2 : 0;
    std::vector<double> lower(count);
    for (auto& v : lower) {
        v = read_le<double>(in);
    }
    return DistanceMatrix(static_cast<int>(n), std::move(lower));
}

void DistanceMatrix::write_csv(const std::filesystem::path& path, const std::vector<std::string>& ids) const
{
    if (static_cast<int>(ids.size()) != n_) {
        throw ValidationError("id count does not match distance matrix size");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write '" + path.string() + "'");
    }
    out.precision(17);
    out << "id";
    for (const auto& id : ids) {
        out << ',' << id;
    }
    out << '\n';
    for (int i = 0; i < n_; ++i) {
        out << ids[static_cast<std::size_t>(i)];
        for (int j = 0; j < n_; ++j) {
            out << ',' << (*this)(i, j);
        }
        out << '\n';
    }
}

DistanceMatrix pairwise_distances(const SequenceDataset& ds, const CostScheme& costs)
{
    if (costs.num_states() < ds.q()) {
        throw ValidationError("cost scheme covers " + std::to_string(costs.num_states()) + " states but dataset has " +
                              std::to_string(ds.q()));
    }
    const int n = ds.n();
    DistanceMatrix out(n);
    // one task per row of the lower triangle; each writes a disjoint slice
    std::vector<double> lower(out.lower_triangle().size());
    parallel_for(1, static_cast<std::size_t>(n), [&](std::size_t row) {
        const int i = static_cast<int>(row);
        const std::size_t base = row * (row - 1) / 2;
        for (int j = 0; j < i; ++j) {
            lower[base + static_cast<std::size_t>(j)] = om_distance(ds.row(i), ds.row(j), costs);
        }
    });
    return DistanceMatrix(n, std::move(lower));
}

} // namespace seqsel
