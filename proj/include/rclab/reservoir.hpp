#pragma once

#include "rclab/linalg.hpp"

#include <cstddef>
#include <cstdint>

namespace rclab {

struct ReservoirConfig {
    std::size_t n_neurons = 300;
    std::size_t input_dim = 2;
    double connect_prob = 0.04;
    double spectral_radius = 0.2;
    double input_scale = 0.1;
    double decay_rate = 10.0;
    double time_step = 0.01;
    std::uint64_t seed = 1;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ReservoirConfig&, const ReservoirConfig&) = default;
};

/// Internal matrix at unit spectral radius, its rescaled copy, and the input
/// matrix (one nonzero per row).
struct ReservoirWeights {
    SparseMatrix m_base;
    SparseMatrix m;
    DenseMatrix w_in;
    double rho = 0.0;

    friend bool operator==(const ReservoirWeights& a, const ReservoirWeights& b) {
        return a.rho == b.rho && a.m_base == b.m_base && a.m == b.m && a.w_in == b.w_in;
    }
};

/// Tolerance used when normalizing the raw matrix to unit spectral radius.
inline constexpr double kSpectralTolerance = 1e-10;

/// Draws the random pattern, values and input matrix from independent
/// substreams of `config.seed` and rescales to `config.spectral_radius`.
ReservoirWeights build_reservoir(const ReservoirConfig& config);

/// Same realization, internal matrix rescaled to `rho`.
ReservoirWeights with_spectral_radius(const ReservoirWeights& weights, double rho);

}  // namespace rclab
