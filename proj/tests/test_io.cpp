#include "rclab/errors.hpp"
#include "rclab/io.hpp"
#include "rclab/random.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

using namespace rclab;

namespace {

std::uint64_t bits(double v) {
    std::uint64_t b;
    std::memcpy(&b, &v, sizeof b);
    return b;
}

bool bit_equal(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (bits(a.data()[i]) != bits(b.data()[i])) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("io") {
    TEST_CASE("shortest round-trip decimal") {
        Rng rng(1);
        for (int k = 0; k < 10000; ++k) {
            const double v = (rng.uniform01() - 0.5) * std::pow(10.0, rng.uniform_open(-300, 300));
            const std::string s = format_double(v);
            CHECK(bits(std::stod(s)) == bits(v));
        }
        CHECK(format_double(0.1) == "0.1");
        CHECK(format_double(200.0) == "200");
    }

    TEST_CASE("sha256 test vector") {
        CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    TEST_CASE("weights round-trip bit-exactly") {
        ReservoirConfig c;
        c.n_neurons = 90;
        c.seed = 5;
        const auto w = build_reservoir(c);
        const auto text = to_json(w, c).dump();
        const auto [w2, c2] = weights_from_json(nlohmann::json::parse(text));
        CHECK(w2 == w);
        CHECK(c2 == c);
        CHECK(to_json(w2, c2).dump() == text);
    }

    TEST_CASE("trained reservoir round-trips bit-exactly") {
        ReservoirConfig c;
        c.n_neurons = 60;
        c.connect_prob = 0.1;
        const TrainedRC t = train_multifunctional(c, TrainingConfig{5.0, 15.0, 1e-6}, 8.0, 5.0);
        const auto path = std::filesystem::temp_directory_path() / "rclab_io_trained.json";
        save_trained(t, path);
        const TrainedRC u = load_trained(path);
        CHECK(bit_equal(u.w_out, t.w_out));
        CHECK(bit_equal(u.init_a, t.init_a));
        CHECK(bit_equal(u.init_b, t.init_b));
        CHECK(u.weights == t.weights);
        CHECK(u.config == t.config);
        CHECK(u.training == t.training);
        CHECK(u.pair.x_cen() == 8.0);
        CHECK(to_json(u).dump() == to_json(t).dump());
        std::filesystem::remove(path);
    }

    TEST_CASE("container errors") {
        CHECK_THROWS_AS(trained_from_json(nlohmann::json{{"format", "something"}}), ConfigError);
        CHECK_THROWS_AS(load_trained("/nonexistent/trained.json"), ConfigError);
    }

    TEST_CASE("config parsing") {
        const auto cfg = ExperimentConfig::parse(
            "# header\n"
            "seed = 12   # trailing comment\n"
            "\n"
            "x_cen=6.5\n"
            "escape_grid = 0.2:0.05:0.3\n"
            "search_grid = 0.1, 0.15,0.3\n"
            "direction = up\n");
        CHECK(cfg.get_u64("seed") == 12);
        CHECK(cfg.get_double("x_cen") == 6.5);
        CHECK(cfg.get_list("escape_grid") == std::vector<double>{0.2, 0.25, 0.3});
        CHECK(cfg.get_list("search_grid") == std::vector<double>{0.1, 0.15, 0.3});
        CHECK(cfg.get_double("ridge", 1e-6) == 1e-6);
        CHECK(cfg.sweep().direction == SweepDirection::Up);
        CHECK(cfg.reservoir().seed == 12);

        CHECK_THROWS_AS(ExperimentConfig::parse("sed = 1\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse("seed = 1\nseed = 2\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse("seed 1\n"), ConfigError);
        CHECK_THROWS_AS(ExperimentConfig::parse("seed =\n"), ConfigError);
        CHECK_THROWS_AS((void)ExperimentConfig::parse("seed = -3\n").get_u64("seed"), ConfigError);
        CHECK_THROWS_AS((void)ExperimentConfig::parse("x_cen = abc\n").get_double("x_cen"), ConfigError);
        CHECK_THROWS_AS((void)ExperimentConfig::parse("direction = sideways\n").sweep(), ConfigError);

        try {
            ExperimentConfig::parse("x_cen = 8\n").require({"x_cen", "seed"});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("'seed'") != std::string::npos);
        }
    }

    TEST_CASE("config hash ignores layout and output location") {
        const auto a = ExperimentConfig::parse("seed = 1\nx_cen = 8\n");
        const auto b = ExperimentConfig::parse("# c\nx_cen=8\n  seed=1\noutput_dir = /tmp/x\n");
        const auto c = ExperimentConfig::parse("seed = 2\nx_cen = 8\n");
        CHECK(a.sha256() == b.sha256());
        CHECK(a.sha256() != c.sha256());
        CHECK(a.sha256().size() == 64);
    }

    TEST_CASE("csv writers") {
        const Provenance prov{7, "abcd", {{"note", "x"}}};
        std::ostringstream out;
        write_escape_csv(out, prov, {{0.2, 31.5}, {0.3, std::nullopt}});
        CHECK(out.str() ==
              "# seed=7\n# config_sha=abcd\n# tool_version=" + std::string(kToolVersion) +
                  "\n# note=x\nrho,t_esc\n0.2,31.5\n0.3,\n");

        std::ostringstream traj;
        write_output_csv(traj, prov, OutputTrajectory{0.0, 0.5, {{1.0, 2.0}, {3.0, -4.25}}});
        CHECK(traj.str().find("t,x,y\n0,1,2\n0.5,3,-4.25\n") != std::string::npos);

        std::ostringstream states;
        write_state_csv(states, prov, StateTrajectory{0.0, 1.0, {(Vector(2) << 0.5, -1).finished()}});
        CHECK(states.str().find("t,r_0,r_1\n0,0.5,-1\n") != std::string::npos);

        std::ostringstream labels;
        ContinuationStep step;
        step.rho = 0.25;
        step.branch = "B";
        step.x_m = {1.5, 2.5};
        step.label = {AttractorKind::Switching, Locus::Both, 0, 0.0};
        write_labels_csv(labels, prov, {step});
        CHECK(labels.str().find("rho,branch,kind,locus,n_clusters\n0.25,B,switching,both,0\n") != std::string::npos);
        std::ostringstream bif;
        write_bifurcation_csv(bif, prov, {step});
        CHECK(bif.str().find("rho,branch,x_m\n0.25,B,1.5\n0.25,B,2.5\n") != std::string::npos);

        std::ostringstream res;
        write_residence_csv(res, prov, {{OrbitId::A, 15.0}});
        CHECK(res.str().find("state,duration\nA,15\n") != std::string::npos);
        std::ostringstream tr;
        write_transitions_csv(tr, prov, {{10.0, OrbitId::B, 3}});
        CHECK(tr.str().find("time,to_state\n10,B\n") != std::string::npos);
        std::ostringstream hist;
        write_histogram_csv(hist, prov, {{1.0, 10.0, 3, 0.1}});
        CHECK(hist.str().find("bin_lo,bin_hi,count,density\n1,10,3,0.1\n") != std::string::npos);
    }
}
