#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace seqsel {

// Deterministic random source. Integer and real draws are derived from raw
// mt19937_64 output so streams are identical across standard libraries.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform()
    {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Index drawn from a discrete distribution given by probabilities.
    int categorical(const std::vector<double>& probs)
    {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            acc += probs[k];
            if (u < acc) {
                return static_cast<int>(k);
            }
        }
        for (std::size_t k = probs.size(); k-- > 0;) {
            if (probs[k] > 0.0) {
                return static_cast<int>(k);
            }
        }
        return 0;
    }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derive an independent stream seed from a master seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    // splitmix64 finaliser
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace seqsel
