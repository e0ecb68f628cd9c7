#pragma once

#include <cstdint>
#include <random>

namespace rclab {

/// Substream tags. A stream's engine is seeded with splitmix64(seed ^ tag*φ),
/// so streams never share a state even for adjacent user seeds.
enum class Stream : std::uint64_t {
    MatrixPattern = 1,
    MatrixValues = 2,
    InputMatrix = 3,
    SpectralStart = 4,
    Probe = 5,
    EchoTest = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Portable draws on top of std::mt19937_64 (whose output sequence is fixed by
/// the standard; the std distributions are not, so they are avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    Rng(std::uint64_t seed, Stream stream)
        : engine_(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL))) {}

    /// Uniform on [0, 1).
    double uniform01() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (lo, hi).
    double uniform_open(double lo, double hi) noexcept {
        const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    /// Uniform integer on [0, n).
    std::uint64_t index(std::uint64_t n) noexcept {
        const auto k = static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace rclab
