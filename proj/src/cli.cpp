#include "rclab/cli.hpp"

#include "rclab/continuation.hpp"
#include "rclab/errors.hpp"
#include "rclab/io.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace rclab {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "Experiment config (key = value)");
    cmd->add_option("--out", opts.out, "Output directory (default: $RCLAB_OUT, then output_dir, then .)");
    cmd->add_option("--jobs", opts.jobs, "Worker threads for independent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opts.seed, "Overrides the config seed");
}

ExperimentConfig load_config(const CommonOptions& opts) {
    if (opts.config.empty()) {
        throw ConfigError("--config is required");
    }
    ExperimentConfig cfg = ExperimentConfig::load(opts.config);
    if (opts.seed) {
        cfg.set("seed", std::to_string(*opts.seed));
    }
    return cfg;
}

fs::path output_dir(const CommonOptions& opts, const ExperimentConfig* cfg) {
    fs::path dir = ".";
    if (!opts.out.empty()) {
        dir = opts.out;
    } else if (const char* env = std::getenv("RCLAB_OUT"); env && *env) {
        dir = env;
    } else if (cfg && cfg->has("output_dir")) {
        dir = cfg->get_string("output_dir");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

std::ofstream open_output(const fs::path& dir, const std::string& name, std::ostream& log) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    log << "writing " << path.string() << '\n';
    return out;
}

Provenance provenance(const ExperimentConfig& cfg) { return {cfg.get_u64("seed"), cfg.sha256(), {}}; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

TrainedRC train_from_config(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.require({"seed", "x_cen"});
    const ReservoirConfig rc = cfg.reservoir();
    const TrainingConfig tc = cfg.training();
    log << "training N=" << rc.n_neurons << " rho=" << rc.spectral_radius << " x_cen=" << cfg.get_double("x_cen")
        << '\n';
    return train_multifunctional(rc, tc, cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
}

/// A trained reservoir from --trained, or a fresh one trained from --config.
struct Source {
    TrainedRC trained;
    Provenance prov;
    std::optional<ExperimentConfig> cfg;
};

Source load_source(const std::string& trained_path, const CommonOptions& opts, std::ostream& log) {
    Source src;
    if (!opts.config.empty()) {
        src.cfg = load_config(opts);
    }
    if (!trained_path.empty()) {
        src.trained = load_trained(trained_path);
        const std::string digest_input = read_file(trained_path) + (src.cfg ? src.cfg->canonical() : "");
        src.prov = {src.trained.config.seed, sha256_hex(digest_input), {}};
    } else if (src.cfg) {
        src.trained = train_from_config(*src.cfg, log);
        src.prov = provenance(*src.cfg);
    } else {
        throw ConfigError("either --trained or --config is required");
    }
    return src;
}

StateVector read_state_file(const fs::path& path, std::size_t n) {
    const std::string text = read_file(path);
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char c = text[pos];
        if (c == '#') {
            pos = text.find('\n', pos);
            if (pos == std::string::npos) {
                break;
            }
            continue;
        }
        if (c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++pos;
            continue;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
        if (ec != std::errc{}) {
            throw UsageError(path.string() + ": unparsable value at offset " + std::to_string(pos));
        }
        values.push_back(v);
        pos = static_cast<std::size_t>(ptr - text.data());
    }
    if (values.size() != n) {
        throw UsageError(path.string() + ": expected " + std::to_string(n) + " state values, found " +
                         std::to_string(values.size()));
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(n));
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& opts, std::ostream& log) {
    const ExperimentConfig cfg = load_config(opts);
    const fs::path dir = output_dir(opts, &cfg);
    const TrainedRC trained = train_from_config(cfg, log);
    save_trained(trained, dir / "trained.json");
    log << "writing " << (dir / "trained.json").string() << '\n';
    const FitReport fit = training_fit(trained);
    auto out = open_output(dir, "fit_report.csv", log);
    write_csv_preamble(out, provenance(cfg), "metric,value");
    out << "max_error," << format_double(fit.max_error) << '\n';
    out << "max_error_a," << format_double(fit.max_error_a) << '\n';
    out << "max_error_b," << format_double(fit.max_error_b) << '\n';
    out << "rms_error," << format_double(fit.rms_error) << '\n';
    out << "columns," << fit.columns << '\n';
    out << "normal_residual," << format_double(trained.normal_residual) << '\n';
    log << "max fit error " << fit.max_error << ", normal-equation residual " << trained.normal_residual << '\n';
    return kExitOk;
}

struct PredictOptions {
    std::string trained;
    std::string init = "A";
    std::optional<double> duration;
    std::size_t stride = 1;
    bool states = false;
};

int cmd_predict(const CommonOptions& opts, const PredictOptions& p, std::ostream& log) {
    Source src = load_source(p.trained, opts, log);
    const fs::path dir = output_dir(opts, src.cfg ? &*src.cfg : nullptr);
    const double duration = p.duration ? *p.duration : (src.cfg ? src.cfg->get_double("duration", 200.0) : 200.0);
    StateVector r0;
    if (p.init == "A") {
        r0 = src.trained.init_a;
    } else if (p.init == "B") {
        r0 = src.trained.init_b;
    } else {
        r0 = read_state_file(p.init, src.trained.weights.m.rows());
    }
    src.prov.extra.push_back({"init", p.init == "A" || p.init == "B" ? p.init : "file"});
    src.prov.extra.push_back({"duration", format_double(duration)});

    const ClosedLoopSystem system = src.trained.closed_loop();
    StateTrajectory states{0.0, system.time_step() * static_cast<double>(p.stride), {}};
    OutputTrajectory outputs{0.0, states.dt, {}};
    double diverged_at = -1.0;
    try {
        integrate_rk4(system, r0, 0.0, duration, system.time_step(), p.stride,
                      [&](std::size_t, double, const StateVector& r) {
                          outputs.outputs.push_back(system.output(r));
                          if (p.states) {
                              states.states.push_back(r);
                          }
                      });
    } catch (const DivergenceError& e) {
        diverged_at = e.time();
    }
    {
        auto out = open_output(dir, "prediction.csv", log);
        write_output_csv(out, src.prov, outputs);
    }
    if (p.states) {
        auto out = open_output(dir, "states.csv", log);
        write_state_csv(out, src.prov, states);
    }
    if (diverged_at >= 0.0) {
        log << "error: closed loop diverged at t=" << diverged_at << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_sweep(const CommonOptions& opts, std::ostream& log) {
    const ExperimentConfig cfg = load_config(opts);
    cfg.require({"seed", "x_cen", "rho_start", "rho_end", "rho_step"});
    const fs::path dir = output_dir(opts, &cfg);
    SweepConfig sweep = cfg.sweep();
    sweep.jobs = opts.jobs;
    const auto steps = continuation_sweep(cfg.reservoir(), cfg.training(), sweep, cfg.relay(),
                                          [&](const ContinuationStep& s) {
                                              log << "rho=" << format_double(s.rho) << " branch=" << s.branch << ' '
                                                  << to_string(s.label.kind) << ' ' << to_string(s.label.locus)
                                                  << '\n';
                                          });
    const Provenance prov = provenance(cfg);
    {
        auto out = open_output(dir, "bifurcation.csv", log);
        write_bifurcation_csv(out, prov, steps);
    }
    auto out = open_output(dir, "labels.csv", log);
    write_labels_csv(out, prov, steps);
    return kExitOk;
}

int cmd_residence(const CommonOptions& opts, std::ostream& log) {
    const ExperimentConfig cfg = load_config(opts);
    cfg.require({"seed", "x_cen", "spectral_radius", "target_switches", "t_max"});
    const fs::path dir = output_dir(opts, &cfg);
    const TrainedRC trained = train_from_config(cfg, log);
    const RelayConfig relay = cfg.relay();
    const std::size_t target = cfg.get_u64("target_switches");
    const double t_max = cfg.get_double("t_max");
    if (target < 1) {
        throw ConfigError("target_switches must be at least 1");
    }

    const ClosedLoopSystem system = trained.closed_loop();
    // n residence samples need n+1 switches.
    const SwitchingRun run = collect_transitions(system, trained.init_a, relay, target + 1, t_max);
    const auto samples = residence_times(run.events);
    std::vector<double> durations;
    durations.reserve(samples.size());
    for (const auto& s : samples) {
        durations.push_back(s.duration);
    }
    std::vector<HistogramBin> bins;
    if (!durations.empty()) {
        const auto [mn, mx] = std::minmax_element(durations.begin(), durations.end());
        const double lo = cfg.get_double("hist_lo", *mn);
        double hi = cfg.get_double("hist_hi", *mx);
        if (!(hi > lo)) {
            hi = 2.0 * lo;
        }
        bins = log_histogram(durations, cfg.get_u64("n_bins", 100), lo, hi);
    }

    Provenance prov = provenance(cfg);
    prov.extra.push_back({"t_end", format_double(run.t_end)});
    {
        auto out = open_output(dir, "transitions.csv", log);
        write_transitions_csv(out, prov, run.events);
    }
    {
        auto out = open_output(dir, "residence.csv", log);
        write_residence_csv(out, prov, samples);
    }
    {
        auto out = open_output(dir, "histogram.csv", log);
        write_histogram_csv(out, prov, bins);
    }
    log << run.events.size() << " switches, " << samples.size() << " residence samples by t=" << run.t_end << '\n';
    if (run.diverged) {
        log << "error: closed loop diverged at t=" << run.t_end << '\n';
        return kExitNumeric;
    }
    if (samples.size() < target) {
        log << "warning: truncated at t_max with " << samples.size() << " of " << target << " samples\n";
        return kExitTruncated;
    }
    return kExitOk;
}

int cmd_escape(const CommonOptions& opts, std::ostream& log) {
    const ExperimentConfig cfg = load_config(opts);
    cfg.require({"seed", "x_cen", "escape_grid", "escape_t_max"});
    const fs::path dir = output_dir(opts, &cfg);
    const ReservoirConfig rc = cfg.reservoir();
    const ReservoirWeights base = build_reservoir(rc);
    const OrbitPair pair = make_orbit_pair(cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
    const auto grid = cfg.get_list("escape_grid");
    log << "escape scan over " << grid.size() << " spectral radii\n";
    const auto points =
        escape_scan(base, rc, cfg.training(), pair, grid, cfg.relay(), cfg.get_double("escape_t_max"), opts.jobs);
    std::vector<std::pair<double, std::optional<double>>> rows;
    for (const auto& p : points) {
        rows.emplace_back(p.rho, p.t_esc);
    }
    auto out = open_output(dir, "escape.csv", log);
    write_escape_csv(out, provenance(cfg), rows);
    return kExitOk;
}

int cmd_search(const CommonOptions& opts, std::ostream& log) {
    const ExperimentConfig cfg = load_config(opts);
    cfg.require({"seed", "x_cen", "search_grid", "search_t_max"});
    const fs::path dir = output_dir(opts, &cfg);
    const ReservoirConfig rc = cfg.reservoir();
    const ReservoirWeights base = build_reservoir(rc);
    const OrbitPair pair = make_orbit_pair(cfg.get_double("x_cen"), cfg.get_double("radius", 5.0));
    const auto grid = cfg.get_list("search_grid");
    const std::size_t min_events = cfg.get_u64("search_min_events", 10);
    log << "switching search over " << grid.size() << " spectral radii\n";
    const auto counts =
        count_switches(base, rc, cfg.training(), pair, grid, cfg.relay(), cfg.get_double("search_t_max"), 0, opts.jobs);
    auto out = open_output(dir, "switch_search.csv", log);
    write_csv_preamble(out, provenance(cfg), "rho,events,diverged,switching");
    std::size_t hits = 0;
    for (const auto& c : counts) {
        const bool switching = c.events >= min_events;
        hits += switching ? 1 : 0;
        out << format_double(c.rho) << ',' << c.events << ',' << (c.diverged ? 1 : 0) << ',' << (switching ? 1 : 0)
            << '\n';
    }
    log << hits << " of " << counts.size() << " grid points switch at least " << min_events << " times\n";
    return kExitOk;
}

struct ProbeOptions {
    std::string trained;
    std::optional<std::size_t> n;
    std::optional<double> box;
    std::optional<double> window;
};

int cmd_probe(const CommonOptions& opts, const ProbeOptions& p, std::ostream& log) {
    Source src = load_source(p.trained, opts, log);
    const fs::path dir = output_dir(opts, src.cfg ? &*src.cfg : nullptr);
    const ExperimentConfig empty;
    const ExperimentConfig& cfg = src.cfg ? *src.cfg : empty;
    ProbeConfig probe;
    probe.n = p.n ? *p.n : cfg.get_u64("n_probes", probe.n);
    probe.box_radius = p.box ? *p.box : cfg.get_double("box_radius", probe.box_radius);
    probe.window = p.window ? *p.window : cfg.get_double("probe_window", probe.window);
    probe.seed = opts.seed ? *opts.seed : src.trained.config.seed;
    probe.jobs = opts.jobs;
    if (!(probe.box_radius >= 0.0)) {
        throw ConfigError("box radius must be non-negative");
    }
    const RelayConfig relay = src.cfg ? src.cfg->relay() : RelayConfig{};
    const auto labels = random_ic_probe(src.trained, probe, relay);
    src.prov.seed = probe.seed;
    src.prov.extra.push_back({"n_probes", std::to_string(probe.n)});
    src.prov.extra.push_back({"box_radius", format_double(probe.box_radius)});
    src.prov.extra.push_back({"window", format_double(probe.window)});
    auto out = open_output(dir, "probe.csv", log);
    write_probe_csv(out, src.prov, labels);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& log) {
    CLI::App app{"Multifunctional reservoir computer experiments", "rclab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    CommonOptions common;
    PredictOptions predict;
    ProbeOptions probe;

    auto* train = app.add_subcommand("train", "Train a readout and write trained.json and fit_report.csv");
    add_common(train, common);

    auto* pred = app.add_subcommand("predict", "Run the closed loop and write prediction.csv");
    add_common(pred, common);
    pred->add_option("--trained", predict.trained, "trained.json from `train`");
    pred->add_option("--init", predict.init, "A, B, or a file of N state values");
    pred->add_option("--duration", predict.duration, "Closed-loop duration");
    pred->add_option("--stride", predict.stride, "Record every n-th step")->check(CLI::PositiveNumber);
    pred->add_flag("--states", predict.states, "Also write the reservoir states");

    auto* sweep = app.add_subcommand("sweep", "Continuation in the spectral radius");
    add_common(sweep, common);

    auto* residence = app.add_subcommand("residence", "Switching statistics at a fixed spectral radius");
    add_common(residence, common);

    auto* escape = app.add_subcommand("escape", "Escape times over a grid of spectral radii");
    add_common(escape, common);

    auto* search = app.add_subcommand("search", "Count relay switches over a grid of spectral radii");
    add_common(search, common);

    auto* prb = app.add_subcommand("probe", "Classify closed-loop runs from random initial states");
    add_common(prb, common);
    prb->add_option("--trained", probe.trained, "trained.json from `train`");
    prb->add_option("--n", probe.n, "Number of initial states")->check(CLI::PositiveNumber);
    prb->add_option("--box", probe.box, "Half-width of the sampling box");
    prb->add_option("--window", probe.window, "Duration of each run");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream msg, err;
        const int code = app.exit(e, msg, err);
        log << msg.str() << err.str();
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*train) return cmd_train(common, log);
        if (*pred) return cmd_predict(common, predict, log);
        if (*sweep) return cmd_sweep(common, log);
        if (*residence) return cmd_residence(common, log);
        if (*escape) return cmd_escape(common, log);
        if (*search) return cmd_search(common, log);
        if (*prb) return cmd_probe(common, probe, log);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UsageError& e) {
        log << "usage error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DivergenceError& e) {
        log << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const SingularMatrixError& e) {
        log << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const EstimationError& e) {
        log << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ConstructionError& e) {
        log << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace rclab
