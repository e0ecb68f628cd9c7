#include "rclab/continuation.hpp"
#include "rclab/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace rclab;

namespace {

// The shipped well-separated configuration.
ReservoirConfig separated_reservoir() {
    ReservoirConfig c;
    c.n_neurons = 300;
    c.spectral_radius = 0.5;
    c.seed = 1;
    return c;
}

const TrainingConfig kTraining{50.0, 300.0, 1e-6};

double hausdorff(const std::vector<double>& a, const std::vector<double>& b) {
    auto one_way = [](const std::vector<double>& p, const std::vector<double>& q) {
        double worst = 0.0;
        for (const double x : p) {
            double best = INFINITY;
            for (const double y : q) best = std::min(best, std::abs(x - y));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

}  // namespace

TEST_SUITE("continuation") {
    TEST_CASE("sweep grids") {
        SweepConfig s;
        s.rho_start = 0.7;
        s.rho_end = 0.1;
        s.rho_step = 0.001;
        const auto g = sweep_grid(s);
        CHECK(g.size() == 601);
        CHECK(g.front() == 0.7);
        CHECK(g.back() == 0.1);
        CHECK(g[1] == 0.699);

        s.rho_step = 1.0;
        CHECK(sweep_grid(s) == std::vector<double>{0.7});

        s.direction = SweepDirection::Up;
        s.rho_start = 0.2;
        s.rho_end = 0.25;
        s.rho_step = 0.01;
        CHECK(sweep_grid(s) == std::vector<double>{0.2, 0.21, 0.22, 0.23, 0.24, 0.25});

        s.rho_step = 0.0;
        CHECK_THROWS_AS(sweep_grid(s), ConfigError);
    }

    TEST_CASE("retraining at a fixed spectral radius is bit-identical") {
        ReservoirConfig c;
        c.n_neurons = 80;
        c.connect_prob = 0.1;
        const auto base = build_reservoir(c);
        const auto pair = make_orbit_pair(6.5, 5.0);
        const TrainingConfig tc{10.0, 30.0, 1e-6};
        const auto a = train_on_weights(with_spectral_radius(base, 0.33), c, tc, pair);
        const auto b = train_on_weights(with_spectral_radius(with_spectral_radius(base, 0.4), 0.33), c, tc, pair);
        CHECK(a.w_out == b.w_out);
    }

    TEST_CASE("last label before a change of kind") {
        std::vector<ContinuationStep> steps(4);
        const double rhos[] = {0.3, 0.29, 0.28, 0.27};
        const AttractorKind kinds[] = {AttractorKind::FixedPoint, AttractorKind::FixedPoint,
                                       AttractorKind::Switching, AttractorKind::FixedPoint};
        for (int k = 0; k < 4; ++k) {
            steps[k].rho = rhos[k];
            steps[k].branch = "A";
            steps[k].label.kind = kinds[k];
        }
        CHECK(last_rho_with_kind(steps, "A", AttractorKind::FixedPoint) == 0.29);
        CHECK(std::isnan(last_rho_with_kind(steps, "A", AttractorKind::Periodic)));
    }

    TEST_CASE("well-separated circles stay reconstructed along a short sweep") {
        const ReservoirConfig rc = separated_reservoir();
        SweepConfig sweep;
        sweep.rho_start = 0.5;
        sweep.rho_end = 0.48;
        sweep.rho_step = 0.01;
        sweep.window = 200.0;
        sweep.x_cen = 8.0;
        sweep.jobs = 2;
        const auto base = build_reservoir(rc);
        const std::vector<BranchSeed> seeds{{"A", {}, OrbitId::A}, {"B", {}, OrbitId::B}};
        const auto steps = track_branches(base, rc, kTraining, sweep, seeds);
        REQUIRE(steps.size() == 6);
        for (const auto& s : steps) {
            CHECK(s.label.kind == AttractorKind::Periodic);
            CHECK(s.label.locus == (s.branch == "A" ? Locus::ASide : Locus::BSide));
            CHECK_FALSE(s.x_m.empty());
            CHECK(s.final_state.allFinite());
        }
        for (std::size_t k = 2; k < steps.size(); ++k) {
            CHECK(steps[k].branch == steps[k - 2].branch);
            CHECK(hausdorff(steps[k].x_m, steps[k - 2].x_m) < 0.5);
        }

        // Running again with one thread gives the same records.
        sweep.jobs = 1;
        const auto again = track_branches(base, rc, kTraining, sweep, seeds);
        for (std::size_t k = 0; k < steps.size(); ++k) {
            CHECK(again[k].x_m == steps[k].x_m);
            CHECK(again[k].final_state == steps[k].final_state);
        }

        // Turning around at the last ρ finds the same attractor first.
        SweepConfig up = sweep;
        up.rho_end = 0.49;
        const ContinuationStep& last_a = steps[4];
        REQUIRE(last_a.branch == "A");
        const auto back = reverse_track(rc, kTraining, last_a, up);
        REQUIRE(back.size() == 2);
        CHECK(back[0].rho == last_a.rho);
        CHECK(back[0].label == last_a.label);
        std::set<double> down_grid;
        for (const auto& s : steps) down_grid.insert(s.rho);
        for (const auto& s : back) CHECK(down_grid.count(s.rho) == 1);
    }

    TEST_CASE("random initial-condition probing") {
        const TrainedRC trained = train_multifunctional(separated_reservoir(), kTraining, 8.0, 5.0);
        ProbeConfig probe;
        probe.n = 6;
        probe.window = 200.0;
        const auto labels = random_ic_probe(trained, probe);
        REQUIRE(labels.size() == 6);
        for (const auto& l : labels) {
            CHECK((l.locus == Locus::ASide || l.locus == Locus::BSide));
        }
        probe.jobs = 3;
        CHECK(random_ic_probe(trained, probe) == labels);

        ProbeConfig origin;
        origin.n = 1;
        origin.box_radius = 0.0;
        origin.window = 100.0;
        const auto a = random_ic_probe(trained, origin);
        const auto b = random_ic_probe(trained, origin);
        CHECK(a == b);
        CHECK(a[0].kind == AttractorKind::FixedPoint);  // the origin is an equilibrium

        origin.n = 0;
        CHECK_THROWS_AS(random_ic_probe(trained, origin), UsageError);
    }

    TEST_CASE("escape and switch scans on the separated configuration") {
        const ReservoirConfig rc = separated_reservoir();
        const auto base = build_reservoir(rc);
        const auto pair = make_orbit_pair(8.0, 5.0);
        const auto esc = escape_scan(base, rc, kTraining, pair, {0.5}, RelayConfig{}, 500.0);
        REQUIRE(esc.size() == 1);
        CHECK_FALSE(esc[0].t_esc);
        const auto sw = count_switches(base, rc, kTraining, pair, {0.5}, RelayConfig{}, 100.0);
        CHECK(sw[0].events == 0);
        CHECK_FALSE(sw[0].diverged);
    }
}
