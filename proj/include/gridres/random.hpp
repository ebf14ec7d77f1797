#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace gridres {

/// SplitMix64 step; used only for deriving seeds, never for sampling.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic combination of a base seed with a stream index. Chaining
/// calls yields independent, reproducible sub-streams from one master seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

/// FNV-1a over arbitrary bytes; stable across platforms. Used to key genomes.
constexpr std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

/// Seeded generator with explicitly-coded distributions. std::mt19937_64 output
/// is fully specified by the standard and the distributions here avoid the
/// implementation-defined std:: ones, so every sample stream is bit-identical
/// across platforms and toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi); returns lo when the interval is degenerate.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Poisson sample by Knuth's product method, chunked so the running
    /// product never underflows for large rates. Exact for all lambda >= 0.
    int poisson(double lambda) {
        if (lambda <= 0.0) {
            return 0;
        }
        int count = 0;
        while (lambda > 0.0) {
            double chunk = lambda > 30.0 ? 30.0 : lambda;
            lambda -= chunk;
            double limit = std::exp(-chunk);
            double prod = uniform();
            while (prod > limit) {
                ++count;
                prod *= uniform();
            }
        }
        return count;
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace gridres
