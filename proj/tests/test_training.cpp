#include "rclab/errors.hpp"
#include "rclab/random.hpp"
#include "rclab/training.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace rclab;

namespace {

DenseMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    DenseMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform_open(-1, 1);
    return m;
}

double regularized_loss(const DenseMatrix& x, const DenseMatrix& y, const DenseMatrix& w, double ridge) {
    return (y - w * x).squaredNorm() + ridge * w.squaredNorm();
}

ReservoirConfig small_config() {
    ReservoirConfig c;
    c.n_neurons = 80;
    c.connect_prob = 0.1;
    c.spectral_radius = 0.5;
    c.seed = 4;
    return c;
}

}  // namespace

TEST_SUITE("training") {
    TEST_CASE("feature map") {
        const StateVector r = (StateVector(2) << 1, -2).finished();
        const Vector q = feature_map(r);
        CHECK(q == (Vector(4) << 1, -2, 1, 4).finished());
        CHECK(feature_map(StateVector::Zero(3)) == Vector::Zero(6));
        const Vector qn = feature_map(-r);
        CHECK(qn.head(2) == -q.head(2));
        CHECK(qn.tail(2) == q.tail(2));
    }

    TEST_CASE("ridge recovers a known linear map") {
        const DenseMatrix x = random_matrix(40, 400, 1);
        const DenseMatrix a = random_matrix(2, 40, 2);
        const DenseMatrix w = ridge_readout(x, a * x, 1e-12);
        CHECK((w - a).norm() / a.norm() <= 1e-6);
    }

    TEST_CASE("ridge with a square invertible design interpolates") {
        const DenseMatrix x = random_matrix(6, 6, 3) + 3.0 * DenseMatrix::Identity(6, 6);
        const DenseMatrix y = random_matrix(2, 6, 4);
        const DenseMatrix w = ridge_readout(x, y, 0.0);
        CHECK((w - y * x.inverse()).norm() <= 1e-10);
    }

    TEST_CASE("shrinkage is monotone in the ridge parameter") {
        const DenseMatrix x = random_matrix(10, 50, 5);
        const DenseMatrix y = random_matrix(2, 50, 6);
        double previous = ridge_readout(x, y, 1e-6).norm();
        for (const double ridge : {1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6}) {
            const double norm = ridge_readout(x, y, ridge).norm();
            CHECK(norm < previous);
            previous = norm;
        }
        CHECK(previous < 1e-3);
    }

    TEST_CASE("singular design without ridge") {
        DenseMatrix x = random_matrix(5, 3, 7);  // rank 3 < 5
        try {
            (void)ridge_readout(x, random_matrix(2, 3, 8), 0.0);
            FAIL("expected SingularMatrixError");
        } catch (const SingularMatrixError& e) {
            CHECK(std::string(e.what()).find("ridge parameter > 0") != std::string::npos);
        }
    }

    TEST_CASE("ridge optimality against random perturbations") {
        const DenseMatrix x = random_matrix(12, 80, 9);
        const DenseMatrix y = random_matrix(2, 80, 10);
        const double ridge = 1e-2;
        const DenseMatrix w = ridge_readout(x, y, ridge);
        const double best = regularized_loss(x, y, w, ridge);
        for (std::uint64_t k = 0; k < 100; ++k) {
            DenseMatrix dw = random_matrix(2, 12, 100 + k);
            dw *= 1e-3 / dw.norm();
            CHECK(regularized_loss(x, y, w + dw, ridge) >= best);
        }
    }

    TEST_CASE("streamed normal equations match the dense route") {
        const DenseMatrix x = random_matrix(16, 1300, 11);
        const DenseMatrix y = random_matrix(2, 1300, 12);
        NormalEquations eq(16, 2, 512);
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
            eq.add(x.col(k), {y(0, k), y(1, k)});
        }
        double residual = 1.0;
        const DenseMatrix w = eq.solve(1e-6, &residual);
        CHECK((w - ridge_readout(x, y, 1e-6)).norm() <= 1e-10 * w.norm());
        CHECK(residual <= 1e-8);
        CHECK(eq.columns() == 1300);
        CHECK((eq.gram() - x * x.transpose()).norm() <= 1e-10 * eq.gram().norm());
    }

    TEST_CASE("training matrix assembly") {
        const ReservoirConfig c = small_config();
        const auto w = build_reservoir(c);
        const auto pair = make_orbit_pair(6.5, 5.0);
        const TrainingConfig tc{1.0, 2.0, 1e-6};
        const auto ra = drive_open_loop(w, c, pair, OrbitId::A, tc.t_train);
        const auto rb = drive_open_loop(w, c, pair, OrbitId::B, tc.t_train);
        const auto m = assemble_training_matrices(ra, rb, pair, tc, c.time_step);
        CHECK(m.x.cols() == 202);
        CHECK(m.y.cols() == 202);
        CHECK(m.x.rows() == 160);
        CHECK(columns_per_orbit(tc, c.time_step) == 101);
        for (Eigen::Index k = 0; k < 101; k += 25) {
            const auto p = orbit_point(pair.orbit_a, tc.t_listen + static_cast<double>(k) * c.time_step);
            CHECK(m.y(0, k) == doctest::Approx(p[0]).epsilon(1e-12));
            CHECK(m.y(1, k) == doctest::Approx(p[1]).epsilon(1e-12));
            CHECK(m.x.col(k) == feature_map(ra.states[100 + static_cast<std::size_t>(k)]));
        }
        const auto short_b = drive_open_loop(w, c, pair, OrbitId::B, 1.5);
        CHECK_THROWS_AS(assemble_training_matrices(ra, short_b, pair, tc, c.time_step), UsageError);
    }

    TEST_CASE("coincident circles give time-reversed input sets") {
        const auto pair = make_orbit_pair(0.0, 5.0);
        const double tau = 0.01;
        // Over one period the B samples are the A samples traversed backwards.
        const int steps = 628;
        for (int k = 0; k <= steps; ++k) {
            const auto a = orbit_point(pair.orbit_a, k * tau);
            const auto b = orbit_point(pair.orbit_b, std::numbers::pi - k * tau);
            CHECK(std::abs(a[0] - b[0]) <= 1e-12);
            CHECK(std::abs(a[1] - b[1]) <= 1e-12);
        }
    }

    TEST_CASE("end-to-end training is deterministic and fits the orbits") {
        const ReservoirConfig c = small_config();
        const TrainingConfig tc{20.0, 60.0, 1e-6};
        const auto a = train_multifunctional(c, tc, 8.0, 5.0);
        const auto b = train_multifunctional(c, tc, 8.0, 5.0);
        CHECK(a.w_out == b.w_out);
        CHECK(a.init_a == b.init_a);
        CHECK(a.normal_residual <= 1e-8);
        CHECK(a.w_out.rows() == 2);
        CHECK(a.w_out.cols() == 160);
        CHECK(a.init_a.cwiseAbs().maxCoeff() < 1.0);
        const FitReport fit = training_fit(a);
        CHECK(fit.columns == 2 * columns_per_orbit(tc, c.time_step));
        CHECK(fit.max_error < 0.1);
    }

    TEST_CASE("training config validation") {
        CHECK_THROWS_AS((TrainingConfig{10.0, 5.0, 1e-6}.validate()), ConfigError);
        CHECK_THROWS_AS((TrainingConfig{0.0, 5.0, 1e-6}.validate()), ConfigError);
        CHECK_THROWS_AS((TrainingConfig{1.0, 5.0, -1.0}.validate()), ConfigError);
    }
}
