// Acceptance checks for the shipped configurations.  Prints one PASS/FAIL line
// per criterion and exits non-zero if any fails.

#include "rclab/analysis.hpp"
#include "rclab/cli.hpp"
#include "rclab/continuation.hpp"
#include "rclab/io.hpp"
#include "rclab/random.hpp"
#include "rclab/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace rclab;
namespace fs = std::filesystem;

namespace {

fs::path config_dir() { return fs::path(RCLAB_CONFIG_DIR); }

ExperimentConfig shipped(const std::string& name) { return ExperimentConfig::load(config_dir() / name); }

TrainedRC train_shipped(const ExperimentConfig& cfg) {
    return train_multifunctional(cfg.reservoir(), cfg.training(), cfg.get_double("x_cen"),
                                 cfg.get_double("radius", 5.0));
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome integrator_order() {
    auto error_at = [](double tau) {
        StateVector r0(1);
        r0[0] = 1.0;
        const auto traj =
            integrate_rk4([](double, const StateVector& r, StateVector& d) { d = -r; }, r0, 0.0, 1.0, tau, 1);
        return std::abs(traj.states.back()[0] - std::exp(-1.0));
    };
    const double ratio = error_at(0.02) / error_at(0.01);
    return {ratio >= 12.0 && ratio <= 20.0, "error ratio " + fmt("%.3f", ratio)};
}

Outcome ridge_correctness() {
    Rng rng(2024);
    DenseMatrix x(40, 400), a(2, 40);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform_open(-1, 1);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.uniform_open(-1, 1);
    const double recovery = (ridge_readout(x, a * x, 1e-12) - a).norm() / a.norm();
    bool ok = recovery <= 1e-6;
    std::string detail = "synthetic recovery " + fmt("%.2e", recovery);
    for (const char* name : {"xcen8.cfg", "xcen65.cfg", "xcen50.cfg", "xcen35.cfg", "xcen20.cfg"}) {
        const TrainedRC t = train_shipped(shipped(name));
        ok = ok && t.normal_residual <= 1e-8;
        detail += std::string("; ") + name + " " + fmt("%.2e", t.normal_residual);
    }
    return {ok, detail};
}

Outcome spectral_radius_triangular() {
    // Upper-triangular: diagonal uniform on (-1, 1), strictly upper entries
    // present with probability 0.04 and uniform on (-1, 1).
    const std::size_t n = 200;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed, Stream::MatrixValues);
        std::vector<Triplet> t;
        double exact = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = rng.uniform_open(-1, 1);
            exact = std::max(exact, std::abs(d));
            t.push_back({i, i, d});
            for (std::size_t j = i + 1; j < n; ++j) {
                if (rng.bernoulli(0.04)) {
                    t.push_back({i, j, rng.uniform_open(-1, 1)});
                }
            }
        }
        const double est = spectral_radius(SparseMatrix::from_triplets(n, n, t), 1e-10, 10);
        worst = std::max(worst, std::abs(est - exact) / exact);
    }
    return {worst <= 1e-6, "worst relative error " + fmt("%.2e", worst) + " over 100 seeds"};
}

Outcome echo_state() {
    const ExperimentConfig cfg = shipped("xcen8.cfg");
    const ReservoirConfig rc = cfg.reservoir();
    const TrainingConfig tc = cfg.training();
    const auto w = build_reservoir(rc);
    const auto pair = make_orbit_pair(cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
    const auto n = static_cast<Eigen::Index>(rc.n_neurons);
    double worst = 0.0;
    for (const auto id : {OrbitId::A, OrbitId::B}) {
        const OpenLoopSystem drive(w, rc, pair.get(id));
        Rng rng(rc.seed, Stream::EchoTest);
        StateVector r1(n);
        for (auto& v : r1) v = rng.uniform_open(-1, 1);
        auto none = [](std::size_t, double, const StateVector&) {};
        const StateVector a = integrate_rk4(drive, StateVector::Zero(n), 0.0, tc.t_listen, rc.time_step, 1000, none);
        const StateVector b = integrate_rk4(drive, r1, 0.0, tc.t_listen, rc.time_step, 1000, none);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-3, "max componentwise gap at t_listen " + fmt("%.2e", worst)};
}

Outcome multifunctionality() {
    const ExperimentConfig cfg = shipped("xcen8.cfg");
    const TrainedRC t = train_shipped(cfg);
    const RelayConfig relay = cfg.relay();
    const ClosedLoopSystem system = t.closed_loop();
    bool ok = true;
    std::string detail;
    for (const auto id : {OrbitId::A, OrbitId::B}) {
        const OutputRun run = run_closed_loop_outputs(system, t.init(id), 200.0, 1);
        if (run.diverged) {
            return {false, "closed loop diverged"};
        }
        std::vector<double> xs, ts;
        double dist = 0.0;
        const OrbitSpec& orbit = t.pair.get(id);
        for (std::size_t i = 0; i < run.outputs.size(); ++i) {
            const double time = run.outputs.time(i);
            if (time < 50.0 - 1e-9) continue;
            const auto& p = run.outputs.outputs[i];
            xs.push_back(p[0]);
            ts.push_back(time);
            dist += std::hypot(p[0] - orbit.x_cen, p[1]);
        }
        dist /= static_cast<double>(xs.size());
        const auto events = relay_transitions(xs, ts, relay);
        ok = ok && events.empty() && std::abs(dist - 5.0) <= 0.5;
        detail += std::string(detail.empty() ? "" : "; ") + std::string(to_string(id)) + ": " +
                  std::to_string(events.size()) + " events, mean distance " + fmt("%.4f", dist);
    }
    return {ok, detail};
}

Outcome switching_phenomenon() {
    const ExperimentConfig cfg = shipped("xcen65.cfg");
    const ReservoirConfig rc = cfg.reservoir();
    const auto base = build_reservoir(rc);
    const auto pair = make_orbit_pair(cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
    const auto grid = cfg.get_list("search_grid");
    const double t_max = cfg.get_double("search_t_max");
    const std::size_t need = cfg.get_u64("search_min_events");
    const bool grid_ok = grid.size() <= 200 && need >= 10 && t_max <= 2000.0 &&
                         std::all_of(grid.begin(), grid.end(), [](double r) { return r >= 0.1 && r <= 0.3; });
    const auto counts = count_switches(base, rc, cfg.training(), pair, grid, cfg.relay(), t_max);
    std::size_t hits = 0;
    for (const auto& c : counts) hits += c.events >= need ? 1 : 0;

    const double pinned = rc.spectral_radius;
    const auto pin = count_switches(base, rc, cfg.training(), pair, {pinned}, cfg.relay(), t_max);
    const bool ok = grid_ok && hits > 0 && pin[0].events >= need;
    return {ok, std::to_string(hits) + " of " + std::to_string(grid.size()) + " grid points switch >= " +
                    std::to_string(need) + " times by t=" + fmt("%g", t_max) + "; pinned rho=" + fmt("%g", pinned) +
                    " has " + std::to_string(pin[0].events) + " events"};
}

Outcome relay_traces() {
    const RelayConfig relay{-2.0, 2.0};
    const std::vector<double> t5{0, 1, 2, 3, 4};
    const auto ev = relay_transitions(std::vector<double>{3, 0, -3, 0, 3}, t5, relay);
    bool ok = ev.size() == 2 && ev[0].index == 2 && ev[0].to_state == OrbitId::B && ev[1].index == 4 &&
              ev[1].to_state == OrbitId::A;
    ok = ok && relay_transitions(std::vector<double>{3, 1, -1, 1, 3}, t5, relay).empty();
    std::vector<double> inside(400), tt(400);
    for (std::size_t i = 0; i < inside.size(); ++i) {
        inside[i] = 1.99 * std::sin(0.1 * static_cast<double>(i));
        tt[i] = static_cast<double>(i);
    }
    ok = ok && relay_transitions(inside, tt, relay).empty();

    std::size_t violations = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        std::vector<double> x(tt.size());
        double v = rng.uniform_open(-3, 3);
        for (auto& s : x) {
            v += rng.uniform_open(-1, 1);
            s = v;
        }
        if (zero_crossings(x) < relay_transitions(x, tt, relay).size()) ++violations;
    }
    ok = ok && violations == 0;
    return {ok, "hand traces " + std::string(ok ? "match" : "differ") + ", dominance violations " +
                    std::to_string(violations) + "/1000"};
}

Outcome residence_pipeline() {
    const ExperimentConfig cfg = shipped("xcen65.cfg");
    const TrainedRC t = train_shipped(cfg);
    const RelayConfig relay = cfg.relay();
    const ClosedLoopSystem system = t.closed_loop();
    const std::size_t target = 500;

    // Stream the run, recording for each switch how long the crossing of the
    // band took (time since the output last sat on the far threshold).
    Relay detector(relay);
    std::vector<TransitionEvent> events;
    std::vector<double> crossing;
    double last_high = -1.0, last_low = -1.0;
    bool diverged = false;
    try {
        integrate_rk4(system, t.init_a, 0.0, cfg.get_double("t_max"), system.time_step(), 1,
                      [&](std::size_t, double time, const StateVector& r) {
                          const double x = system.output(r)[0];
                          if (auto e = detector.feed(time, x)) {
                              crossing.push_back(time - (e->to_state == OrbitId::B ? last_high : last_low));
                              events.push_back(*e);
                          }
                          if (x >= relay.beta) last_high = time;
                          if (x <= relay.alpha) last_low = time;
                          return events.size() < target + 1;
                      });
    } catch (const DivergenceError&) {
        diverged = true;
    }
    const auto samples = residence_times(events);
    if (diverged || samples.size() < target) {
        return {false, "only " + std::to_string(samples.size()) + " residence samples" +
                           (diverged ? " (diverged)" : "")};
    }
    std::vector<double> d;
    double min_a = INFINITY, min_b = INFINITY, max_cross = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        d.push_back(samples[k].duration);
        (samples[k].state == OrbitId::A ? min_a : min_b) =
            std::min(samples[k].state == OrbitId::A ? min_a : min_b, samples[k].duration);
    }
    // Dwell k ends with switch k+1, whose band crossing happened inside it.
    bool dwell_exceeds_crossing = true;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        max_cross = std::max(max_cross, crossing[k + 1]);
        dwell_exceeds_crossing = dwell_exceeds_crossing && samples[k].duration > crossing[k + 1] &&
                                 crossing[k + 1] > 0.0;
    }
    const auto [mn, mx] = std::minmax_element(d.begin(), d.end());
    const auto bins = log_histogram(d, 100, *mn, *mx);
    double mass = 0.0;
    for (const auto& b : bins) mass += b.density * (b.hi - b.lo);
    const bool ok = std::abs(mass - 1.0) <= 1e-9 && bins.size() == 100 && min_a > 0.0 && min_b > 0.0 &&
                    dwell_exceeds_crossing;
    return {ok, std::to_string(samples.size()) + " samples by t=" + fmt("%.0f", events.back().time) +
                    ", mass " + fmt("%.12f", mass) + ", min dwell A " + fmt("%.2f", min_a) + " B " +
                    fmt("%.2f", min_b) + ", longest band crossing " + fmt("%.2f", max_cross) + ", max dwell " +
                    fmt("%.1f", *mx)};
}

Outcome escape_trend() {
    const ExperimentConfig cfg = shipped("xcen65.cfg");
    const ReservoirConfig rc = cfg.reservoir();
    const auto base = build_reservoir(rc);
    const auto pair = make_orbit_pair(cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
    auto grid = cfg.get_list("escape_grid");
    std::sort(grid.begin(), grid.end());
    const auto pts = escape_scan(base, rc, cfg.training(), pair, grid, cfg.relay(), cfg.get_double("escape_t_max"));
    std::size_t first_none = pts.size();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (!pts[k].t_esc) {
            first_none = k;
            break;
        }
    }
    bool split = first_none > 0 && first_none < pts.size();
    for (std::size_t k = first_none; k < pts.size(); ++k) split = split && !pts[k].t_esc;

    std::vector<double> finite;
    for (std::size_t k = 0; k < first_none; ++k) finite.push_back(*pts[k].t_esc);
    bool monotone = finite.size() >= 5;
    std::vector<double> smooth;
    for (std::size_t k = 0; k + 5 <= finite.size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += finite[k + j];
        smooth.push_back(s / 5.0);
    }
    for (std::size_t k = 1; k < smooth.size(); ++k) monotone = monotone && smooth[k] >= smooth[k - 1];
    const std::string where = first_none < pts.size() ? fmt("%g", pts[first_none].rho) : std::string("none");
    return {split && monotone, std::to_string(finite.size()) + " finite escapes up to rho=" +
                                   (first_none > 0 ? fmt("%g", pts[first_none - 1].rho) : std::string("-")) +
                                   " (" + fmt("%.1f", finite.empty() ? 0.0 : finite.front()) + " .. " +
                                   fmt("%.1f", finite.empty() ? 0.0 : finite.back()) + "), none from rho=" +
                                   where + ", smoothed trend " + (monotone ? "non-decreasing" : "violated")};
}

std::string data_rows(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line, out;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') out += line + '\n';
    }
    return out;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "rclab_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    auto variant = [&](const std::string& base, const std::string& name,
                       std::vector<std::pair<std::string, std::string>> overrides) {
        ExperimentConfig cfg = shipped(base);
        for (const auto& [k, v] : overrides) cfg.set(k, v);
        const fs::path path = root / name;
        std::ofstream(path) << cfg.canonical();
        return path.string();
    };
    const std::string c8 = variant("xcen8.cfg", "c8.cfg",
                                   {{"rho_start", "0.5"}, {"rho_end", "0.48"}, {"n_probes", "3"}, {"window", "100"}});
    const std::string c65 = variant("xcen65.cfg", "c65.cfg",
                                    {{"target_switches", "20"},
                                     {"escape_grid", "0.25,0.3"},
                                     {"escape_t_max", "300"},
                                     {"search_grid", "0.25,0.27"},
                                     {"search_t_max", "300"}});

    struct Command {
        std::vector<std::string> args;
        std::vector<std::string> files;
    };
    const std::vector<Command> commands{
        {{"train", "--config", c8}, {"trained.json", "fit_report.csv"}},
        {{"predict", "--config", c8, "--init", "A", "--stride", "10"}, {"prediction.csv"}},
        {{"sweep", "--config", c8, "--jobs", "2"}, {"bifurcation.csv", "labels.csv"}},
        {{"probe", "--config", c8, "--jobs", "2"}, {"probe.csv"}},
        {{"residence", "--config", c65}, {"transitions.csv", "residence.csv", "histogram.csv"}},
        {{"escape", "--config", c65, "--jobs", "2"}, {"escape.csv"}},
        {{"search", "--config", c65}, {"switch_search.csv"}},
    };
    std::size_t identical = 0, compared = 0;
    std::string failures;
    for (const auto& cmd : commands) {
        std::string first[8];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = root / (cmd.args[0] + "_" + std::to_string(rep));
            auto args = cmd.args;
            args.insert(args.end(), {"--out", out.string()});
            std::ostringstream log;
            const int code = run_cli(args, log);
            if (code != kExitOk) {
                failures += " " + cmd.args[0] + "(exit " + std::to_string(code) + ")";
            }
            for (std::size_t f = 0; f < cmd.files.size(); ++f) {
                const std::string rows = data_rows(out / cmd.files[f]);
                if (rep == 0) {
                    first[f] = rows;
                } else {
                    ++compared;
                    if (rows == first[f] && !rows.empty()) {
                        ++identical;
                    } else {
                        failures += " " + cmd.files[f];
                    }
                }
            }
        }
    }
    fs::remove_all(root);
    return {identical == compared && failures.empty(),
            std::to_string(identical) + "/" + std::to_string(compared) + " outputs byte-identical" +
                (failures.empty() ? "" : "; problems:" + failures)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "integrator order", 1.0, integrator_order},
        {2, "ridge correctness", 60.0, ridge_correctness},
        {3, "spectral radius of triangular matrices", 10.0, spectral_radius_triangular},
        {4, "echo-state convergence", 60.0, echo_state},
        {5, "multifunctionality at x_cen=8", 300.0, multifunctionality},
        {6, "switching at x_cen=6.5", 1800.0, switching_phenomenon},
        {7, "relay traces and hysteresis dominance", 5.0, relay_traces},
        {8, "residence-time pipeline", 1800.0, residence_pipeline},
        {9, "escape-time trend", 1200.0, escape_trend},
        {10, "determinism", 1800.0, determinism},
    };
    // Optional argument: run only the listed criterion numbers.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("[%s] %2d %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
