#include "rclab/continuation.hpp"

#include "parallel.hpp"
#include "rclab/errors.hpp"
#include "rclab/random.hpp"

#include <cmath>
#include <limits>

namespace rclab {

void SweepConfig::validate() const {
    if (!(rho_step > 0.0)) {
        throw ConfigError("rho_step must be positive");
    }
    if (!(window > 0.0)) {
        throw ConfigError("window must be positive");
    }
    if (!(rho_start >= 0.0) || !(rho_end >= 0.0)) {
        throw ConfigError("spectral radii must be non-negative");
    }
    if (record_stride < 1) {
        throw ConfigError("record_stride must be at least 1");
    }
}

std::vector<double> sweep_grid(const SweepConfig& sweep) {
    sweep.validate();
    const double sign = sweep.direction == SweepDirection::Down ? -1.0 : 1.0;
    const double span = sign * (sweep.rho_end - sweep.rho_start);
    std::vector<double> grid;
    const auto steps = span < 0.0 ? 0 : static_cast<std::size_t>(std::floor(span / sweep.rho_step + 1e-9));
    grid.reserve(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        // Snap to 1e-12 so decimal grids print cleanly.
        const double rho = sweep.rho_start + sign * static_cast<double>(k) * sweep.rho_step;
        grid.push_back(std::round(rho * 1e12) / 1e12);
    }
    return grid;
}

std::vector<ContinuationStep> track_branches(const ReservoirWeights& base, const ReservoirConfig& rc,
                                             const TrainingConfig& tc, const SweepConfig& sweep,
                                             const std::vector<BranchSeed>& seeds, const RelayConfig& relay,
                                             const StepCallback& on_step) {
    relay.validate();
    const OrbitPair pair = make_orbit_pair(sweep.x_cen, sweep.radius);
    const std::vector<double> grid = sweep_grid(sweep);

    struct Branch {
        std::string name;
        StateVector state;
        bool frozen = false;
    };
    std::vector<Branch> branches;
    branches.reserve(seeds.size());
    for (const auto& s : seeds) {
        branches.push_back({s.name, s.state, false});
    }

    std::vector<ContinuationStep> steps;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double rho = grid[g];
        const TrainedRC trained = train_on_weights(with_spectral_radius(base, rho), rc, tc, pair);
        if (g == 0) {
            for (std::size_t b = 0; b < branches.size(); ++b) {
                if (branches[b].state.size() == 0) {
                    branches[b].state = trained.init(seeds[b].orbit);
                }
            }
        }
        std::vector<ContinuationStep> at_rho(branches.size());
        std::vector<char> active(branches.size(), 0);
        detail::parallel_for(branches.size(), sweep.jobs, [&](std::size_t b) {
            if (branches[b].frozen) {
                return;
            }
            active[b] = 1;
            // Systems carry scratch buffers, so each worker builds its own.
            const ClosedLoopSystem system = trained.closed_loop();
            ContinuationStep& step = at_rho[b];
            step.rho = rho;
            step.branch = branches[b].name;
            const OutputRun run = run_closed_loop_outputs(system, branches[b].state, sweep.window, sweep.record_stride);
            const double discard = 0.5 * sweep.window;
            step.label = classify_attractor(run, relay, pair, discard,
                                            ClassifyOptions{.min_window = std::min(50.0, 0.5 * sweep.window)});
            if (!run.diverged) {
                const auto xs = run.outputs.x();
                for (const auto& m : local_maxima(xs, run.outputs.t0, run.outputs.dt, discard)) {
                    step.x_m.push_back(m.value);
                }
            }
            step.final_state = run.final_state;
        });
        for (std::size_t b = 0; b < branches.size(); ++b) {
            if (!active[b]) {
                continue;
            }
            branches[b].state = at_rho[b].final_state;
            branches[b].frozen = at_rho[b].label.kind == AttractorKind::Diverged;
            if (on_step) {
                on_step(at_rho[b]);
            }
            steps.push_back(std::move(at_rho[b]));
        }
    }
    return steps;
}

std::vector<ContinuationStep> continuation_sweep(const ReservoirConfig& rc, const TrainingConfig& tc,
                                                 const SweepConfig& sweep, const RelayConfig& relay,
                                                 const StepCallback& on_step) {
    const ReservoirWeights base = build_reservoir(rc);
    const std::vector<BranchSeed> seeds{{"A", {}, OrbitId::A}, {"B", {}, OrbitId::B}};
    return track_branches(base, rc, tc, sweep, seeds, relay, on_step);
}

std::vector<ContinuationStep> reverse_track(const ReservoirConfig& rc, const TrainingConfig& tc,
                                            const ContinuationStep& from, SweepConfig sweep,
                                            const RelayConfig& relay, const StepCallback& on_step) {
    if (from.final_state.size() == 0 || !from.final_state.allFinite()) {
        throw UsageError("reverse_track: starting state must be finite");
    }
    sweep.rho_start = from.rho;
    sweep.direction = SweepDirection::Up;
    const ReservoirWeights base = build_reservoir(rc);
    return track_branches(base, rc, tc, sweep, {{from.branch, from.final_state, OrbitId::A}}, relay, on_step);
}

double last_rho_with_kind(const std::vector<ContinuationStep>& steps, const std::string& branch,
                          AttractorKind kind) {
    double last = std::nan("");
    for (const auto& s : steps) {
        if (s.branch != branch) {
            continue;
        }
        if (s.label.kind != kind) {
            break;
        }
        last = s.rho;
    }
    return last;
}

std::vector<AttractorLabel> random_ic_probe(const TrainedRC& trained, const ProbeConfig& probe,
                                            const RelayConfig& relay) {
    if (probe.n < 1) {
        throw UsageError("random_ic_probe: need at least one probe");
    }
    const auto n = static_cast<Eigen::Index>(trained.weights.m.rows());
    std::vector<AttractorLabel> labels(probe.n);
    detail::parallel_for(probe.n, probe.jobs, [&](std::size_t i) {
        const ClosedLoopSystem system = trained.closed_loop();
        Rng rng(splitmix64(probe.seed) ^ static_cast<std::uint64_t>(i), Stream::Probe);
        StateVector r0(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            r0[k] = probe.box_radius == 0.0 ? 0.0 : rng.uniform_open(-probe.box_radius, probe.box_radius);
        }
        const OutputRun run = run_closed_loop_outputs(system, r0, probe.window, probe.record_stride);
        labels[i] = classify_attractor(run, relay, trained.pair, 0.5 * probe.window,
                                       ClassifyOptions{.min_window = std::min(50.0, 0.5 * probe.window)});
    });
    return labels;
}

std::vector<SwitchCount> count_switches(const ReservoirWeights& base, const ReservoirConfig& rc,
                                        const TrainingConfig& tc, const OrbitPair& pair,
                                        const std::vector<double>& grid, const RelayConfig& relay, double t_max,
                                        std::size_t event_cap, std::size_t jobs) {
    std::vector<SwitchCount> out(grid.size());
    const std::size_t target = event_cap == 0 ? std::numeric_limits<std::size_t>::max() : event_cap;
    detail::parallel_for(grid.size(), jobs, [&](std::size_t g) {
        const TrainedRC trained = train_on_weights(with_spectral_radius(base, grid[g]), rc, tc, pair);
        const ClosedLoopSystem system = trained.closed_loop();
        const SwitchingRun run = collect_transitions(system, trained.init_a, relay, target, t_max);
        out[g] = {grid[g], run.events.size(), run.diverged};
    });
    return out;
}

std::vector<EscapePoint> escape_scan(const ReservoirWeights& base, const ReservoirConfig& rc,
                                     const TrainingConfig& tc, const OrbitPair& pair,
                                     const std::vector<double>& grid, const RelayConfig& relay, double t_max,
                                     std::size_t jobs) {
    std::vector<EscapePoint> out(grid.size());
    detail::parallel_for(grid.size(), jobs, [&](std::size_t g) {
        const TrainedRC trained = train_on_weights(with_spectral_radius(base, grid[g]), rc, tc, pair);
        out[g] = {grid[g], escape_time(trained, relay, t_max)};
    });
    return out;
}

}  // namespace rclab
