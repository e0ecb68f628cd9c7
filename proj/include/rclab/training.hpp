#pragma once

#include "rclab/dynamics.hpp"
#include "rclab/linalg.hpp"
#include "rclab/reservoir.hpp"
#include "rclab/signal.hpp"

#include <cstddef>

namespace rclab {

struct TrainingConfig {
    double t_listen = 50.0;
    double t_train = 550.0;
    double ridge = 1e-6;

    /// Throws ConfigError.
    void validate() const;

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

/// Closed-loop-ready reservoir: weights, readout, and the open-loop end states
/// for each orbit (the canonical closed-loop initial conditions).
struct TrainedRC {
    ReservoirWeights weights;
    ReservoirConfig config;
    TrainingConfig training;
    OrbitPair pair;
    DenseMatrix w_out;
    StateVector init_a;
    StateVector init_b;
    /// Relative residual of the normal equations at solve time.
    double normal_residual = 0.0;

    [[nodiscard]] const StateVector& init(OrbitId id) const noexcept { return id == OrbitId::A ? init_a : init_b; }
    [[nodiscard]] ClosedLoopSystem closed_loop() const { return ClosedLoopSystem(weights, config, w_out); }
};

/// q(r) = (r, r∘r).
Vector feature_map(const StateVector& r);

struct TrainingMatrices {
    DenseMatrix x;  ///< 2N × K features
    DenseMatrix y;  ///< D × K targets
};

/// Concatenated columns [A | B] of q(r(t)) and u(t) for t = t_listen, t_listen+τ, ..., t_train.
/// Both responses must be recorded on the τ-grid from t=0.
TrainingMatrices assemble_training_matrices(const StateTrajectory& resp_a, const StateTrajectory& resp_b,
                                            const OrbitPair& pair, const TrainingConfig& tc, double tau);

/// Number of training columns per orbit.
std::size_t columns_per_orbit(const TrainingConfig& tc, double tau);

/// W_out = Y Xᵀ (X Xᵀ + ridge·I)⁻¹.
DenseMatrix ridge_readout(const DenseMatrix& x, const DenseMatrix& y, double ridge);

/// Streaming accumulation of X Xᵀ and X Yᵀ, so the full K-column matrices
/// never have to be held in memory.
class NormalEquations {
public:
    NormalEquations(std::size_t feature_dim, std::size_t output_dim, std::size_t block = 512);

    void add(const Vector& features, const Point2& target);

    /// Solves for the readout.  `residual`, when non-null, receives the relative
    /// normal-equation residual of the solution.
    [[nodiscard]] DenseMatrix solve(double ridge, double* residual = nullptr);

    [[nodiscard]] std::size_t columns() const noexcept { return columns_; }
    /// X Xᵀ (full symmetric) and X Yᵀ of everything added so far.
    [[nodiscard]] DenseMatrix gram();
    [[nodiscard]] DenseMatrix cross();

private:
    void flush();

    DenseMatrix gram_lower_;
    DenseMatrix cross_;
    DenseMatrix x_block_;
    DenseMatrix y_block_;
    std::size_t filled_ = 0;
    std::size_t columns_ = 0;
};

/// Relative residual ‖(X Xᵀ + ridge I) W_outᵀ − X Yᵀ‖_F / ‖X Yᵀ‖_F.
double normal_equation_residual(const DenseMatrix& gram, const DenseMatrix& cross, const DenseMatrix& w_out,
                                double ridge);

/// Full pipeline on a fixed realization: drive each orbit from r(0)=0,
/// accumulate the training columns, solve the ridge problem.
TrainedRC train_on_weights(const ReservoirWeights& weights, const ReservoirConfig& rc, const TrainingConfig& tc,
                           const OrbitPair& pair);

/// Builds the realization from `rc.seed` and trains on the orbit pair (x_cen, b).
TrainedRC train_multifunctional(const ReservoirConfig& rc, const TrainingConfig& tc, double x_cen, double b);

struct FitReport {
    double max_error = 0.0;
    double rms_error = 0.0;
    double max_error_a = 0.0;
    double max_error_b = 0.0;
    std::size_t columns = 0;
};

/// Re-drives both orbits and evaluates ‖W_out q(r(t)) − u(t)‖ on every training column.
FitReport training_fit(const TrainedRC& trained);

}  // namespace rclab
