#include "rclab/reservoir.hpp"

#include "rclab/errors.hpp"
#include "rclab/random.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace rclab {

void ReservoirConfig::validate() const {
    if (n_neurons < 1) {
        throw ConfigError("n_neurons must be at least 1");
    }
    if (input_dim < 1) {
        throw ConfigError("input_dim must be at least 1");
    }
    if (!(connect_prob > 0.0 && connect_prob <= 1.0)) {
        throw ConfigError("connect_prob must lie in (0, 1]");
    }
    if (!(spectral_radius >= 0.0) || !std::isfinite(spectral_radius)) {
        throw ConfigError("spectral_radius must be non-negative");
    }
    if (!std::isfinite(input_scale)) {
        throw ConfigError("input_scale must be finite");
    }
    if (!(decay_rate > 0.0) || !std::isfinite(decay_rate)) {
        throw ConfigError("decay_rate must be positive");
    }
    if (!(time_step > 0.0) || !std::isfinite(time_step)) {
        throw ConfigError("time_step must be positive");
    }
}

ReservoirWeights build_reservoir(const ReservoirConfig& config) {
    config.validate();
    const std::size_t n = config.n_neurons;

    Rng pattern(config.seed, Stream::MatrixPattern);
    Rng values(config.seed, Stream::MatrixValues);
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(static_cast<double>(n * n) * config.connect_prob * 1.1) + 8);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (pattern.bernoulli(config.connect_prob)) {
                entries.push_back({i, j, values.uniform_open(-1.0, 1.0)});
            }
        }
    }
    const SparseMatrix raw = SparseMatrix::from_triplets(n, n, std::move(entries));

    double raw_radius = 0.0;
    try {
        raw_radius = spectral_radius(raw, kSpectralTolerance, 10, {.seed = config.seed});
    } catch (const EstimationError& e) {
        throw ConstructionError(std::string("spectral radius of the raw reservoir did not converge (") + e.what() +
                                "); try a different seed");
    }
    if (!(raw_radius > 1e-12)) {
        throw ConstructionError("raw reservoir matrix has zero spectral radius (seed " +
                                std::to_string(config.seed) + ", N=" + std::to_string(n) +
                                "); choose a different seed or a larger N");
    }

    Rng input(config.seed, Stream::InputMatrix);
    DenseMatrix w_in = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.input_dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto col = input.index(config.input_dim);
        w_in(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = input.uniform_open(-1.0, 1.0);
    }

    ReservoirWeights w;
    w.m_base = raw.scaled(1.0 / raw_radius);
    w.w_in = std::move(w_in);
    return with_spectral_radius(w, config.spectral_radius);
}

ReservoirWeights with_spectral_radius(const ReservoirWeights& weights, double rho) {
    if (!(rho >= 0.0)) {
        throw UsageError("spectral radius must be non-negative");
    }
    ReservoirWeights w;
    w.m_base = weights.m_base;
    w.m = weights.m_base.scaled(rho);
    w.w_in = weights.w_in;
    w.rho = rho;
    return w;
}

}  // namespace rclab
