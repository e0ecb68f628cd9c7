#pragma once

#include "rclab/errors.hpp"
#include "rclab/linalg.hpp"
#include "rclab/reservoir.hpp"
#include "rclab/signal.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

namespace rclab {

using StateVector = Vector;

/// Any |r_i| above this aborts integration.
inline constexpr double kDivergenceGuard = 10.0;

/// States on a uniform grid t0, t0+dt, ...  (reservoir space).
struct StateTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<StateVector> states;

    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
    [[nodiscard]] double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
};

/// Readout outputs on a uniform grid (projected space).
struct OutputTrajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<Point2> outputs;

    [[nodiscard]] std::size_t size() const noexcept { return outputs.size(); }
    [[nodiscard]] double time(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
    [[nodiscard]] std::vector<double> x() const;
    [[nodiscard]] std::vector<double> y() const;
};

/// Number of τ-steps covering [t0, t1]; throws UsageError when the span is not
/// a whole number of steps.
std::size_t step_count(double t0, double t1, double tau);

/// Classical fixed-step RK4.  `rhs(t, r, drdt)` writes the derivative into
/// `drdt`; `observe(step, t, r)` is called at step 0 and at every multiple of
/// `stride`; an observer returning bool stops the integration early by
/// returning false.  Returns the last integrated state.  Throws DivergenceError carrying the
/// time of the first step whose state is non-finite or exceeds the guard.
template <class Rhs, class Observer>
StateVector integrate_rk4(Rhs&& rhs, StateVector r, double t0, double t1, double tau, std::size_t stride,
                          Observer&& observe, double guard = kDivergenceGuard) {
    if (!(tau > 0.0)) {
        throw UsageError("integrate_rk4: step must be positive");
    }
    if (stride < 1) {
        throw UsageError("integrate_rk4: stride must be at least 1");
    }
    const std::size_t steps = step_count(t0, t1, tau);
    const auto n = r.size();
    StateVector k1(n), k2(n), k3(n), k4(n), tmp(n);
    constexpr bool can_stop =
        std::is_same_v<std::invoke_result_t<Observer&, std::size_t, double, const StateVector&>, bool>;
    auto notify = [&](std::size_t step, double t) {
        if constexpr (can_stop) {
            return observe(step, t, static_cast<const StateVector&>(r));
        } else {
            observe(step, t, static_cast<const StateVector&>(r));
            return true;
        }
    };
    if (!notify(0, t0)) {
        return r;
    }
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * tau;
        rhs(t, r, k1);
        tmp = r + (0.5 * tau) * k1;
        rhs(t + 0.5 * tau, tmp, k2);
        tmp = r + (0.5 * tau) * k2;
        rhs(t + 0.5 * tau, tmp, k3);
        tmp = r + tau * k3;
        rhs(t + tau, tmp, k4);
        r += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        const double t_next = t0 + static_cast<double>(s + 1) * tau;
        const double peak = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
        if (!(peak <= guard) || !r.allFinite()) {
            throw DivergenceError(t_next);
        }
        if ((s + 1) % stride == 0 && !notify(s + 1, t_next)) {
            break;
        }
    }
    return r;
}

using RhsFunction = std::function<void(double, const StateVector&, StateVector&)>;

/// Records every `stride`-th state.
StateTrajectory integrate_rk4(const RhsFunction& rhs, const StateVector& r0, double t0, double t1, double tau,
                              std::size_t stride, double guard = kDivergenceGuard);

/// Precomputed form of the reservoir's input coupling: row i of σ·W_in has a
/// single nonzero `gain[i]` in column `column[i]`.
struct InputCoupling {
    std::vector<std::uint32_t> column;
    std::vector<double> gain;

    InputCoupling() = default;
    InputCoupling(const DenseMatrix& w_in, double sigma);
};

/// Driven reservoir: ṙ = γ[−r + tanh(M r + σ W_in u(t))].
class OpenLoopSystem {
public:
    OpenLoopSystem(const ReservoirWeights& weights, const ReservoirConfig& config, OrbitSpec drive);

    void operator()(double t, const StateVector& r, StateVector& drdt) const;

private:
    const ReservoirWeights* weights_;
    double gamma_;
    OrbitSpec drive_;
    InputCoupling input_;
    mutable Vector pre_;
};

/// Autonomous reservoir: the drive replaced by the readout W_out q(r).
class ClosedLoopSystem {
public:
    ClosedLoopSystem(const ReservoirWeights& weights, const ReservoirConfig& config, const DenseMatrix& w_out);

    void operator()(double t, const StateVector& r, StateVector& drdt) const;

    /// û = W_out q(r) for the two-dimensional task.
    [[nodiscard]] Point2 output(const StateVector& r) const;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double time_step() const noexcept { return tau_; }

private:
    const ReservoirWeights* weights_;
    std::size_t n_;
    double gamma_;
    double tau_;
    InputCoupling input_;
    DenseMatrix w_lin_;
    DenseMatrix w_sq_;
    mutable Vector pre_;
    mutable Vector sq_;
    mutable Vector u_;
};

StateVector open_loop_rhs(const StateVector& r, const Point2& u, const ReservoirWeights& w,
                          const ReservoirConfig& c);

StateVector closed_loop_rhs(const StateVector& r, const ReservoirWeights& w, const DenseMatrix& w_out,
                            const ReservoirConfig& c);

/// Integrates the driven reservoir from r(0)=0 over [0, t_train], recording
/// every `stride` steps.
StateTrajectory drive_open_loop(const ReservoirWeights& w, const ReservoirConfig& c, const OrbitPair& pair,
                                OrbitId which, double t_train, std::size_t stride = 1);

struct ClosedLoopRun {
    StateTrajectory states;
    OutputTrajectory outputs;
};

/// Integrates the closed loop from r0 for `duration`, recording both the
/// reservoir states and their readout.
ClosedLoopRun run_closed_loop(const ReservoirWeights& w, const ReservoirConfig& c, const DenseMatrix& w_out,
                              const StateVector& r0, double duration, std::size_t stride = 1);

struct OutputRun {
    OutputTrajectory outputs;
    StateVector final_state;
    bool diverged = false;
    double divergence_time = 0.0;
};

/// Output-only closed-loop run; divergence is reported in the result instead
/// of thrown, with outputs recorded up to the last good step.
OutputRun run_closed_loop_outputs(const ClosedLoopSystem& system, const StateVector& r0, double duration,
                                  std::size_t stride = 1);

}  // namespace rclab
