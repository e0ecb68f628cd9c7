#include "rclab/training.hpp"

#include "rclab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rclab {

void TrainingConfig::validate() const {
    if (!(t_listen > 0.0)) {
        throw ConfigError("t_listen must be positive");
    }
    if (!(t_train > t_listen)) {
        throw ConfigError("t_train must exceed t_listen");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw ConfigError("ridge must be non-negative");
    }
}

Vector feature_map(const StateVector& r) {
    Vector q(2 * r.size());
    q.head(r.size()) = r;
    q.tail(r.size()) = r.array().square().matrix();
    return q;
}

std::size_t columns_per_orbit(const TrainingConfig& tc, double tau) {
    return step_count(tc.t_listen, tc.t_train, tau) + 1;
}

namespace {

std::size_t grid_index(const StateTrajectory& traj, double t, double tau) {
    if (std::abs(traj.dt - tau) > 1e-12 * tau) {
        throw UsageError("training response must be recorded every time step");
    }
    const double offset = (t - traj.t0) / tau;
    const double k = std::round(offset);
    if (std::abs(offset - k) > 1e-6 || k < 0.0) {
        throw UsageError("time " + std::to_string(t) + " is not on the response grid");
    }
    return static_cast<std::size_t>(k);
}

}  // namespace

TrainingMatrices assemble_training_matrices(const StateTrajectory& resp_a, const StateTrajectory& resp_b,
                                            const OrbitPair& pair, const TrainingConfig& tc, double tau) {
    tc.validate();
    const std::size_t per_orbit = columns_per_orbit(tc, tau);
    if (resp_a.size() == 0 || resp_b.size() == 0) {
        throw UsageError("empty training response");
    }
    const auto n = resp_a.states.front().size();
    TrainingMatrices out{DenseMatrix(2 * n, static_cast<Eigen::Index>(2 * per_orbit)),
                         DenseMatrix(2, static_cast<Eigen::Index>(2 * per_orbit))};

    Eigen::Index col = 0;
    for (const auto* resp : {&resp_a, &resp_b}) {
        const OrbitSpec& orbit = resp == &resp_a ? pair.orbit_a : pair.orbit_b;
        const std::size_t first = grid_index(*resp, tc.t_listen, tau);
        const std::size_t last = grid_index(*resp, tc.t_train, tau);
        if (last >= resp->size() || last + 1 - first != per_orbit) {
            throw UsageError("training response does not cover [t_listen, t_train]");
        }
        for (std::size_t k = first; k <= last; ++k, ++col) {
            out.x.col(col) = feature_map(resp->states[k]);
            const Point2 u = orbit_point(orbit, tc.t_listen + static_cast<double>(k - first) * tau);
            out.y(0, col) = u[0];
            out.y(1, col) = u[1];
        }
    }
    return out;
}

double normal_equation_residual(const DenseMatrix& gram, const DenseMatrix& cross, const DenseMatrix& w_out,
                                double ridge) {
    DenseMatrix lhs = gram * w_out.transpose();
    lhs += ridge * w_out.transpose();
    const double denom = cross.norm();
    return (lhs - cross).norm() / (denom > 0.0 ? denom : 1.0);
}

namespace {

DenseMatrix solve_normal(const DenseMatrix& gram, const DenseMatrix& cross, double ridge) {
    DenseMatrix a = gram;
    a.diagonal().array() += ridge;
    try {
        return spd_solve(a, cross).transpose();
    } catch (const SingularMatrixError& e) {
        if (ridge == 0.0) {
            throw SingularMatrixError(e.pivot(), "normal matrix is singular; use a ridge parameter > 0");
        }
        throw;
    }
}

}  // namespace

DenseMatrix ridge_readout(const DenseMatrix& x, const DenseMatrix& y, double ridge) {
    if (x.cols() < 1 || x.cols() != y.cols()) {
        throw UsageError("ridge_readout: feature and target matrices need the same positive column count");
    }
    if (!(ridge >= 0.0)) {
        throw UsageError("ridge_readout: ridge parameter must be non-negative");
    }
    DenseMatrix gram = DenseMatrix::Zero(x.rows(), x.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    const DenseMatrix cross = x * y.transpose();
    return solve_normal(gram, cross, ridge);
}

NormalEquations::NormalEquations(std::size_t feature_dim, std::size_t output_dim, std::size_t block)
    : gram_lower_(DenseMatrix::Zero(static_cast<Eigen::Index>(feature_dim), static_cast<Eigen::Index>(feature_dim))),
      cross_(DenseMatrix::Zero(static_cast<Eigen::Index>(feature_dim), static_cast<Eigen::Index>(output_dim))),
      x_block_(static_cast<Eigen::Index>(feature_dim), static_cast<Eigen::Index>(block)),
      y_block_(static_cast<Eigen::Index>(output_dim), static_cast<Eigen::Index>(block)) {
    if (output_dim != 2) {
        throw UsageError("NormalEquations: only two-dimensional targets are supported");
    }
}

void NormalEquations::add(const Vector& features, const Point2& target) {
    if (features.size() != x_block_.rows()) {
        throw UsageError("NormalEquations: feature length mismatch");
    }
    const auto c = static_cast<Eigen::Index>(filled_);
    x_block_.col(c) = features;
    y_block_(0, c) = target[0];
    y_block_(1, c) = target[1];
    ++columns_;
    if (++filled_ == static_cast<std::size_t>(x_block_.cols())) {
        flush();
    }
}

void NormalEquations::flush() {
    if (filled_ == 0) {
        return;
    }
    const auto c = static_cast<Eigen::Index>(filled_);
    gram_lower_.selfadjointView<Eigen::Lower>().rankUpdate(x_block_.leftCols(c));
    cross_.noalias() += x_block_.leftCols(c) * y_block_.leftCols(c).transpose();
    filled_ = 0;
}

DenseMatrix NormalEquations::gram() {
    flush();
    DenseMatrix g = gram_lower_;
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    return g;
}

DenseMatrix NormalEquations::cross() {
    flush();
    return cross_;
}

DenseMatrix NormalEquations::solve(double ridge, double* residual) {
    if (columns_ == 0) {
        throw UsageError("NormalEquations: no columns accumulated");
    }
    const DenseMatrix g = gram();
    DenseMatrix w_out = solve_normal(g, cross_, ridge);
    if (residual != nullptr) {
        *residual = normal_equation_residual(g, cross_, w_out, ridge);
    }
    return w_out;
}

namespace {

// Drives one orbit from r(0)=0 and hands every training-window state to `sink`.
template <class Sink>
StateVector drive_training_window(const ReservoirWeights& weights, const ReservoirConfig& rc,
                                  const TrainingConfig& tc, const OrbitSpec& orbit, Sink&& sink) {
    OpenLoopSystem system(weights, rc, orbit);
    const std::size_t first = step_count(0.0, tc.t_listen, rc.time_step);
    const StateVector r0 = StateVector::Zero(static_cast<Eigen::Index>(weights.m.rows()));
    return integrate_rk4(system, r0, 0.0, tc.t_train, rc.time_step, 1,
                         [&](std::size_t step, double, const StateVector& r) {
                             if (step >= first) {
                                 const double t = tc.t_listen + static_cast<double>(step - first) * rc.time_step;
                                 sink(r, orbit_point(orbit, t));
                             }
                         });
}

}  // namespace

TrainedRC train_on_weights(const ReservoirWeights& weights, const ReservoirConfig& rc, const TrainingConfig& tc,
                           const OrbitPair& pair) {
    rc.validate();
    tc.validate();
    if (rc.input_dim != 2) {
        throw ConfigError("the two-orbit task needs input_dim = 2");
    }
    // Both bounds must land on the step grid.
    (void)step_count(0.0, tc.t_listen, rc.time_step);
    (void)step_count(0.0, tc.t_train, rc.time_step);

    const std::size_t n = weights.m.rows();
    NormalEquations normal(2 * n, 2);
    Vector q(static_cast<Eigen::Index>(2 * n));
    const auto nn = static_cast<Eigen::Index>(n);
    auto sink = [&](const StateVector& r, const Point2& u) {
        q.head(nn) = r;
        q.tail(nn) = r.array().square().matrix();
        normal.add(q, u);
    };

    TrainedRC trained;
    trained.weights = weights;
    trained.config = rc;
    trained.config.spectral_radius = weights.rho;
    trained.training = tc;
    trained.pair = pair;
    trained.init_a = drive_training_window(weights, rc, tc, pair.orbit_a, sink);
    trained.init_b = drive_training_window(weights, rc, tc, pair.orbit_b, sink);
    trained.w_out = normal.solve(tc.ridge, &trained.normal_residual);
    if (!trained.w_out.allFinite()) {
        throw SingularMatrixError(0, "readout is not finite");
    }
    return trained;
}

TrainedRC train_multifunctional(const ReservoirConfig& rc, const TrainingConfig& tc, double x_cen, double b) {
    const ReservoirWeights weights = build_reservoir(rc);
    return train_on_weights(weights, rc, tc, make_orbit_pair(x_cen, b));
}

FitReport training_fit(const TrainedRC& trained) {
    FitReport report;
    double sum_sq = 0.0;
    for (const OrbitId id : {OrbitId::A, OrbitId::B}) {
        double worst = 0.0;
        drive_training_window(trained.weights, trained.config, trained.training, trained.pair.get(id),
                              [&](const StateVector& r, const Point2& u) {
                                  const Vector out = trained.w_out * feature_map(r);
                                  const double err = std::hypot(out[0] - u[0], out[1] - u[1]);
                                  worst = std::max(worst, err);
                                  sum_sq += err * err;
                                  ++report.columns;
                              });
        (id == OrbitId::A ? report.max_error_a : report.max_error_b) = worst;
    }
    report.max_error = std::max(report.max_error_a, report.max_error_b);
    report.rms_error = report.columns > 0 ? std::sqrt(sum_sq / static_cast<double>(report.columns)) : 0.0;
    return report;
}

}  // namespace rclab
