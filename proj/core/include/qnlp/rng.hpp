#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qnlp {

/// Deterministic random source. The engine is std::mt19937_64 (portable by
/// the standard); the distributions are mapped by hand because the standard
/// library distribution objects are not bit-reproducible across
/// implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        // 53 random mantissa bits, as in generate_canonical but fixed.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller. One value per call, no caching,
    /// so the draw sequence is independent of call interleaving.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is biased for huge n; all uses here have
        // n << 2^32 where the bias is negligible and determinism is what
        // matters.
        return engine_() % n;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives the seed of a (seed, step, stream) substream. Used by dropout so
/// that masks are reproducible regardless of evaluation order.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t step,
                                 std::uint64_t stream) {
    return mix64(mix64(mix64(seed) ^ step) ^ stream);
}

}  // namespace qnlp
