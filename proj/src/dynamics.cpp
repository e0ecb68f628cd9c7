#include "rclab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rclab {

std::vector<double> OutputTrajectory::x() const {
    std::vector<double> v(outputs.size());
    std::transform(outputs.begin(), outputs.end(), v.begin(), [](const Point2& p) { return p[0]; });
    return v;
}

std::vector<double> OutputTrajectory::y() const {
    std::vector<double> v(outputs.size());
    std::transform(outputs.begin(), outputs.end(), v.begin(), [](const Point2& p) { return p[1]; });
    return v;
}

std::size_t step_count(double t0, double t1, double tau) {
    const double span = t1 - t0;
    if (!(span >= 0.0)) {
        throw UsageError("integration end time precedes start time");
    }
    const double ratio = span / tau;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-6) {
        throw UsageError("integration span " + std::to_string(span) + " is not a whole number of steps of " +
                         std::to_string(tau));
    }
    return static_cast<std::size_t>(steps);
}

StateTrajectory integrate_rk4(const RhsFunction& rhs, const StateVector& r0, double t0, double t1, double tau,
                              std::size_t stride, double guard) {
    StateTrajectory traj;
    traj.t0 = t0;
    traj.dt = tau * static_cast<double>(stride);
    traj.states.reserve(step_count(t0, t1, tau) / std::max<std::size_t>(stride, 1) + 1);
    integrate_rk4(
        rhs, r0, t0, t1, tau, stride,
        [&](std::size_t, double, const StateVector& r) { traj.states.push_back(r); }, guard);
    return traj;
}

InputCoupling::InputCoupling(const DenseMatrix& w_in, double sigma) {
    const auto n = w_in.rows();
    column.assign(static_cast<std::size_t>(n), 0);
    gain.assign(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index nonzeros = 0;
        for (Eigen::Index j = 0; j < w_in.cols(); ++j) {
            if (w_in(i, j) != 0.0) {
                ++nonzeros;
                column[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(j);
                gain[static_cast<std::size_t>(i)] = sigma * w_in(i, j);
            }
        }
        if (nonzeros > 1) {
            throw UsageError("input matrix row " + std::to_string(i) + " has more than one nonzero");
        }
    }
}

OpenLoopSystem::OpenLoopSystem(const ReservoirWeights& weights, const ReservoirConfig& config, OrbitSpec drive)
    : weights_(&weights),
      gamma_(config.decay_rate),
      drive_(drive),
      input_(weights.w_in, config.input_scale),
      pre_(static_cast<Eigen::Index>(weights.m.rows())) {
    if (weights.w_in.cols() != 2) {
        throw UsageError("open-loop drive requires a two-dimensional input matrix");
    }
}

void OpenLoopSystem::operator()(double t, const StateVector& r, StateVector& drdt) const {
    const Point2 u = orbit_point(drive_, t);
    weights_->m.multiply_into(r.data(), pre_.data());
    const auto n = static_cast<std::size_t>(r.size());
    for (std::size_t i = 0; i < n; ++i) {
        pre_[static_cast<Eigen::Index>(i)] += input_.gain[i] * u[input_.column[i]];
    }
    drdt = gamma_ * (pre_.array().tanh() - r.array()).matrix();
}

ClosedLoopSystem::ClosedLoopSystem(const ReservoirWeights& weights, const ReservoirConfig& config,
                                   const DenseMatrix& w_out)
    : weights_(&weights),
      n_(weights.m.rows()),
      gamma_(config.decay_rate),
      tau_(config.time_step),
      input_(weights.w_in, config.input_scale) {
    const auto n = static_cast<Eigen::Index>(n_);
    if (w_out.rows() != weights.w_in.cols() || w_out.cols() != 2 * n) {
        throw UsageError("readout must be " + std::to_string(weights.w_in.cols()) + "x" + std::to_string(2 * n) +
                         ", got " + std::to_string(w_out.rows()) + "x" + std::to_string(w_out.cols()));
    }
    if (w_out.rows() != 2) {
        throw UsageError("closed loop requires a two-dimensional readout");
    }
    w_lin_ = w_out.leftCols(n);
    w_sq_ = w_out.rightCols(n);
    pre_.resize(n);
    sq_.resize(n);
    u_.resize(2);
}

void ClosedLoopSystem::operator()(double, const StateVector& r, StateVector& drdt) const {
    sq_ = r.array().square().matrix();
    u_.noalias() = w_lin_ * r;
    u_.noalias() += w_sq_ * sq_;
    weights_->m.multiply_into(r.data(), pre_.data());
    for (std::size_t i = 0; i < n_; ++i) {
        pre_[static_cast<Eigen::Index>(i)] += input_.gain[i] * u_[input_.column[i]];
    }
    drdt = gamma_ * (pre_.array().tanh() - r.array()).matrix();
}

Point2 ClosedLoopSystem::output(const StateVector& r) const {
    const Vector u = w_lin_ * r + w_sq_ * r.array().square().matrix();
    return {u[0], u[1]};
}

StateVector open_loop_rhs(const StateVector& r, const Point2& u, const ReservoirWeights& w,
                          const ReservoirConfig& c) {
    if (static_cast<std::size_t>(r.size()) != w.m.cols()) {
        throw UsageError("open_loop_rhs: state length does not match reservoir size");
    }
    if (w.w_in.cols() != 2) {
        throw UsageError("open_loop_rhs: input matrix must have two columns");
    }
    Vector drive = w.w_in * Eigen::Vector2d(u[0], u[1]);
    Vector pre = sparse_matvec(w.m, r) + c.input_scale * drive;
    return c.decay_rate * (pre.array().tanh() - r.array()).matrix();
}

StateVector closed_loop_rhs(const StateVector& r, const ReservoirWeights& w, const DenseMatrix& w_out,
                            const ReservoirConfig& c) {
    ClosedLoopSystem system(w, c, w_out);
    if (static_cast<std::size_t>(r.size()) != system.size()) {
        throw UsageError("closed_loop_rhs: state length does not match reservoir size");
    }
    StateVector out(r.size());
    system(0.0, r, out);
    return out;
}

StateTrajectory drive_open_loop(const ReservoirWeights& w, const ReservoirConfig& c, const OrbitPair& pair,
                                OrbitId which, double t_train, std::size_t stride) {
    if (!(t_train > 0.0)) {
        throw UsageError("drive_open_loop: training time must be positive");
    }
    OpenLoopSystem system(w, c, pair.get(which));
    const StateVector r0 = StateVector::Zero(static_cast<Eigen::Index>(w.m.rows()));
    StateTrajectory traj;
    traj.t0 = 0.0;
    traj.dt = c.time_step * static_cast<double>(stride);
    traj.states.reserve(step_count(0.0, t_train, c.time_step) / stride + 1);
    integrate_rk4(system, r0, 0.0, t_train, c.time_step, stride,
                  [&](std::size_t, double, const StateVector& r) { traj.states.push_back(r); });
    return traj;
}

ClosedLoopRun run_closed_loop(const ReservoirWeights& w, const ReservoirConfig& c, const DenseMatrix& w_out,
                              const StateVector& r0, double duration, std::size_t stride) {
    ClosedLoopSystem system(w, c, w_out);
    if (static_cast<std::size_t>(r0.size()) != system.size()) {
        throw UsageError("run_closed_loop: initial state has length " + std::to_string(r0.size()) +
                         ", expected " + std::to_string(system.size()));
    }
    ClosedLoopRun run;
    run.states.dt = run.outputs.dt = c.time_step * static_cast<double>(stride);
    integrate_rk4(system, r0, 0.0, duration, c.time_step, stride, [&](std::size_t, double, const StateVector& r) {
        run.states.states.push_back(r);
        run.outputs.outputs.push_back(system.output(r));
    });
    return run;
}

OutputRun run_closed_loop_outputs(const ClosedLoopSystem& system, const StateVector& r0, double duration,
                                  std::size_t stride) {
    if (static_cast<std::size_t>(r0.size()) != system.size()) {
        throw UsageError("closed-loop initial state has length " + std::to_string(r0.size()) + ", expected " +
                         std::to_string(system.size()));
    }
    OutputRun run;
    run.outputs.dt = system.time_step() * static_cast<double>(stride);
    run.outputs.outputs.reserve(step_count(0.0, duration, system.time_step()) / stride + 1);
    run.final_state = r0;
    try {
        run.final_state = integrate_rk4(system, r0, 0.0, duration, system.time_step(), stride,
                                        [&](std::size_t, double, const StateVector& r) {
                                            run.outputs.outputs.push_back(system.output(r));
                                            run.final_state = r;
                                        });
    } catch (const DivergenceError& e) {
        run.diverged = true;
        run.divergence_time = e.time();
    }
    return run;
}

}  // namespace rclab
