#include "rclab/dynamics.hpp"
#include "rclab/random.hpp"
#include "rclab/training.hpp"

#include <doctest.h>

#include <cmath>

using namespace rclab;

namespace {

void decay(double, const StateVector& r, StateVector& d) { d = -r; }

double decay_error(double tau) {
    StateVector r0(1);
    r0[0] = 1.0;
    const auto traj = integrate_rk4(decay, r0, 0.0, 1.0, tau, 1);
    return std::abs(traj.states.back()[0] - std::exp(-1.0));
}

ReservoirConfig small_config(std::size_t n = 60) {
    ReservoirConfig c;
    c.n_neurons = n;
    c.connect_prob = 0.1;
    c.spectral_radius = 0.5;
    c.seed = 11;
    return c;
}

}  // namespace

TEST_SUITE("dynamics") {
    TEST_CASE("one RK4 step of exponential decay") {
        StateVector r0(1);
        r0[0] = 1.0;
        const auto traj = integrate_rk4(decay, r0, 0.0, 0.01, 0.01, 1);
        REQUIRE(traj.size() == 2);
        // 1 - τ + τ²/2 - τ³/6 + τ⁴/24 at τ = 0.01.
        CHECK(std::abs(traj.states[1][0] - 0.99004983375) <= 1e-11);
    }

    TEST_CASE("constant right-hand side keeps the state") {
        StateVector r0 = StateVector::Constant(3, 0.25);
        const auto traj = integrate_rk4([](double, const StateVector& r, StateVector& d) { d = StateVector::Zero(r.size()); },
                                        r0, 0.0, 1.0, 0.01, 10);
        CHECK(traj.size() == 11);
        for (const auto& s : traj.states) {
            CHECK(s == r0);
        }
        CHECK(traj.time(10) == doctest::Approx(1.0));
    }

    TEST_CASE("fourth-order convergence") {
        const double e1 = decay_error(0.1), e2 = decay_error(0.05);
        const double order = std::log2(e1 / e2);
        CHECK(order >= 3.8);
        CHECK(order <= 4.2);
        const double ratio = decay_error(0.02) / decay_error(0.01);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
    }

    TEST_CASE("integration errors") {
        StateVector r0(1);
        r0[0] = 1.0;
        CHECK_THROWS_AS(integrate_rk4(decay, r0, 0.0, 1.005, 0.01, 1), UsageError);
        CHECK_THROWS_AS(integrate_rk4(decay, r0, 1.0, 0.0, 0.01, 1), UsageError);
        CHECK_THROWS_AS(integrate_rk4(decay, r0, 0.0, 1.0, 0.01, 0), UsageError);
        auto grow = [](double, const StateVector& r, StateVector& d) { d = 5.0 * r; };
        try {
            (void)integrate_rk4(grow, r0, 0.0, 2.0, 0.01, 1);
            FAIL("expected divergence");
        } catch (const DivergenceError& e) {
            // e^{5t} passes 10 at t = ln(10)/5.
            CHECK(e.time() == doctest::Approx(std::log(10.0) / 5.0).epsilon(0.01));
        }
    }

    TEST_CASE("open-loop right-hand side") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        const auto n = static_cast<Eigen::Index>(c.n_neurons);
        CHECK(open_loop_rhs(StateVector::Zero(n), {0.0, 0.0}, w, c) == StateVector::Zero(n));

        // Single neuron, no recurrence, input term 0.5.
        ReservoirConfig one;
        one.n_neurons = 1;
        one.input_scale = 1.0;
        DenseMatrix w_in(1, 2);
        w_in << 0.5, 0.0;
        const ReservoirWeights unit{SparseMatrix::from_triplets(1, 1, {}), SparseMatrix::from_triplets(1, 1, {}), w_in,
                                    0.0};
        const StateVector d = open_loop_rhs(StateVector::Zero(1), {1.0, 0.0}, unit, one);
        CHECK(d[0] == doctest::Approx(one.decay_rate * 0.46211715726000974).epsilon(1e-14));

        // Saturation: tanh → ±1.
        const StateVector r = StateVector::Constant(1, 0.3);
        const StateVector sat = open_loop_rhs(r, {1e6, 0.0}, unit, one);
        CHECK(sat[0] == doctest::Approx(one.decay_rate * (1.0 - 0.3)).epsilon(1e-12));
    }

    TEST_CASE("closed-loop right-hand side") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        const auto n = static_cast<Eigen::Index>(c.n_neurons);
        Rng rng(5);
        DenseMatrix w_out(2, 2 * n);
        for (Eigen::Index i = 0; i < w_out.size(); ++i) w_out.data()[i] = rng.uniform_open(-1, 1);
        CHECK(closed_loop_rhs(StateVector::Zero(n), w, w_out, c) == StateVector::Zero(n));

        StateVector r(n);
        for (auto& x : r) x = rng.uniform_open(-0.5, 0.5);
        const Vector u = w_out * feature_map(r);
        const StateVector via_open = open_loop_rhs(r, {u[0], u[1]}, w, c);
        CHECK((closed_loop_rhs(r, w, w_out, c) - via_open).norm() <= 1e-13);

        const StateVector decoupled = closed_loop_rhs(r, w, DenseMatrix::Zero(2, 2 * n), c);
        const StateVector expect = c.decay_rate * (-r + sparse_matvec(w.m, r).array().tanh().matrix());
        CHECK((decoupled - expect).norm() <= 1e-13);

        const ClosedLoopSystem system(w, c, w_out);
        StateVector d(n);
        system(0.0, r, d);
        CHECK((d - closed_loop_rhs(r, w, w_out, c)).norm() <= 1e-13);
    }

    TEST_CASE("open-loop drive grid and determinism") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        const auto pair = make_orbit_pair(6.5, 5.0);
        const auto a = drive_open_loop(w, c, pair, OrbitId::A, 0.1);
        CHECK(a.size() == 11);
        CHECK(a.states.front() == StateVector::Zero(60));
        CHECK(a.time(10) == doctest::Approx(0.1));
        const auto b = drive_open_loop(w, c, pair, OrbitId::A, 0.1);
        CHECK(a.states.back() == b.states.back());

        const auto tiny = make_orbit_pair(0.0, 1e-300);
        const auto z = drive_open_loop(w, c, tiny, OrbitId::A, 1.0);
        CHECK(z.states.back().cwiseAbs().maxCoeff() < 1e-250);
    }

    TEST_CASE("echo-state convergence from different initial states") {
        const ReservoirConfig c = small_config(100);
        const auto w = build_reservoir(c);
        const OpenLoopSystem drive(w, c, make_orbit_pair(8.0, 5.0).orbit_a);
        Rng rng(1, Stream::EchoTest);
        StateVector r1(100);
        for (auto& x : r1) x = rng.uniform_open(-1, 1);
        auto none = [](std::size_t, double, const StateVector&) {};
        const StateVector a = integrate_rk4(drive, StateVector::Zero(100), 0.0, 50.0, c.time_step, 1000, none);
        const StateVector b = integrate_rk4(drive, r1, 0.0, 50.0, c.time_step, 1000, none);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
    }

    TEST_CASE("closed loop from the origin stays there and grids agree") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        Rng rng(2);
        DenseMatrix w_out(2, 120);
        for (Eigen::Index i = 0; i < w_out.size(); ++i) w_out.data()[i] = rng.uniform_open(-1, 1);
        const auto run = run_closed_loop(w, c, w_out, StateVector::Zero(60), 5.0, 10);
        CHECK(run.states.size() == run.outputs.size());
        CHECK(run.states.dt == run.outputs.dt);
        for (const auto& p : run.outputs.outputs) {
            CHECK(p[0] == 0.0);
            CHECK(p[1] == 0.0);
        }
        const ClosedLoopSystem system(w, c, w_out);
        const auto single = run_closed_loop_outputs(system, StateVector::Zero(60), 0.0);
        CHECK(single.outputs.size() == 1);
    }

    TEST_CASE("closed-loop states stay inside the tanh image") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        Rng rng(8);
        DenseMatrix w_out(2, 120);
        for (Eigen::Index i = 0; i < w_out.size(); ++i) w_out.data()[i] = rng.uniform_open(-3, 3);
        StateVector r0(60);
        for (auto& x : r0) x = rng.uniform_open(-2, 2);
        const auto run = run_closed_loop(w, c, w_out, r0, 20.0, 1);
        // |r(t)| ≤ 1 + e^{-γt}(|r(0)| - 1) componentwise.
        const double excess = r0.cwiseAbs().maxCoeff() - 1.0;
        for (std::size_t i = 0; i < run.states.size(); ++i) {
            const double t = run.states.time(i);
            if (t >= 5.0 / c.decay_rate) {
                CHECK(run.states.states[i].cwiseAbs().maxCoeff() <= 1.0 + std::exp(-c.decay_rate * t) * excess + 1e-9);
            }
        }
    }
}
