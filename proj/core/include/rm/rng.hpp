#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace rm {

/// Counter-based pseudo-random stream.
///
/// Every consumer derives its own stream from a master seed plus a path of
/// integer indices (scenario, month, day, field, ...). Streams with distinct
/// paths are statistically independent, and a draw never depends on how many
/// draws other streams made, which is what makes parallel evaluation and the
/// degenerate-window/complete-trajectory equivalence reproducible bit for bit.
///
/// The generator itself is SplitMix64 applied to key + counter. It satisfies
/// UniformRandomBitGenerator, so it plugs into <random> adaptors if needed,
/// though the samplers below avoid libstdc++-specific distributions on purpose.
class RngStream {
  public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (polar form rejected; trig form keeps
    /// the draw count per call fixed at two, which stream splitting relies on).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Normal truncated to [lo, hi] by rejection, with a clamp fallback after
    /// a fixed number of attempts so the draw always terminates.
    double truncated_normal(double mean, double sigma, double lo, double hi) {
        if (sigma <= 0.0) return std::min(hi, std::max(lo, mean));
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double x = normal(mean, sigma);
            if (x >= lo && x <= hi) return x;
        }
        return std::min(hi, std::max(lo, mean));
    }

    bool bernoulli(double p) { return uniform() < p; }

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Derives the key for a child stream. Path elements are hashed in order, so
/// derive(derive(s, a), b) == derive(s, a, b).
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t k = RngStream::mix(master ^ 0xd1b54a32d192ed03ULL);
    for (std::uint64_t p : path) {
        k = RngStream::mix(k ^ RngStream::mix(p + 0x2545f4914f6cdd1dULL));
    }
    return k;
}

inline RngStream make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return RngStream(derive_seed(master, path));
}

} // namespace rm
