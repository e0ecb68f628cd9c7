#include "rclab/analysis.hpp"

#include "rclab/errors.hpp"
#include "rclab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rclab {

void RelayConfig::validate() const {
    if (!(alpha < beta)) {
        throw ConfigError("relay lower threshold must be below the upper threshold");
    }
}

Relay::Relay(RelayConfig config) : config_(config) { config_.validate(); }

std::optional<TransitionEvent> Relay::feed(double t, double x) {
    const std::size_t index = index_++;
    std::optional<OrbitId> reading;
    if (x >= config_.beta) {
        reading = OrbitId::A;
    } else if (x <= config_.alpha) {
        reading = OrbitId::B;
    }
    if (!reading) {
        return std::nullopt;
    }
    if (!state_) {
        state_ = initial_ = reading;
        initial_time_ = t;
        return std::nullopt;
    }
    if (reading == state_) {
        return std::nullopt;
    }
    state_ = reading;
    return TransitionEvent{t, *reading, index};
}

std::vector<TransitionEvent> relay_transitions(std::span<const double> x, std::span<const double> t,
                                               const RelayConfig& relay) {
    if (x.size() != t.size()) {
        throw UsageError("relay_transitions: series and time grid differ in length");
    }
    Relay detector(relay);
    std::vector<TransitionEvent> events;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (auto ev = detector.feed(t[i], x[i])) {
            events.push_back(*ev);
        }
    }
    return events;
}

std::size_t zero_crossings(std::span<const double> x) {
    std::size_t count = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if ((x[i - 1] >= 0.0) != (x[i] >= 0.0)) {
            ++count;
        }
    }
    return count;
}

std::vector<ResidenceSample> residence_times(std::span<const TransitionEvent> events) {
    std::vector<ResidenceSample> samples;
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        if (events[k + 1].to_state == events[k].to_state) {
            throw UsageError("residence_times: events do not alternate at index " + std::to_string(k + 1));
        }
        const double duration = events[k + 1].time - events[k].time;
        if (!(duration > 0.0)) {
            throw UsageError("residence_times: event times are not strictly increasing");
        }
        samples.push_back({events[k].to_state, duration});
    }
    return samples;
}

std::vector<HistogramBin> log_histogram(std::span<const double> durations, std::size_t n_bins, double lo,
                                        double hi) {
    if (n_bins < 1) {
        throw UsageError("log_histogram: need at least one bin");
    }
    if (!(lo > 0.0) || !(hi > lo)) {
        throw UsageError("log_histogram: require 0 < lo < hi");
    }
    std::vector<double> edges(n_bins + 1);
    const double ratio = hi / lo;
    for (std::size_t k = 0; k <= n_bins; ++k) {
        edges[k] = lo * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n_bins));
    }
    edges.front() = lo;
    edges.back() = hi;

    std::vector<HistogramBin> bins(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        bins[k].lo = edges[k];
        bins[k].hi = edges[k + 1];
    }
    std::size_t total = 0;
    const double log_ratio = std::log(ratio);
    for (const double d : durations) {
        if (!(d > 0.0)) {
            throw UsageError("log_histogram: durations must be positive");
        }
        if (d < lo || d > hi) {
            continue;
        }
        auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n_bins) * std::log(d / lo) / log_ratio));
        k = std::min(k, n_bins - 1);
        // Correct for rounding in the logarithm: bins are [lo_k, hi_k).
        while (k > 0 && d < edges[k]) {
            --k;
        }
        while (k + 1 < n_bins && d >= edges[k + 1]) {
            ++k;
        }
        ++bins[k].count;
        ++total;
    }
    if (total > 0) {
        for (auto& b : bins) {
            b.density = static_cast<double>(b.count) / (static_cast<double>(total) * (b.hi - b.lo));
        }
    }
    return bins;
}

std::vector<LocalMaximum> local_maxima(std::span<const double> x, double t0, double dt, double t_discard) {
    std::vector<LocalMaximum> out;
    const std::size_t n = x.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (!(x[i - 1] < x[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && x[j + 1] == x[i]) {
            ++j;
        }
        if (j + 1 < n && x[j + 1] < x[i]) {
            const double t = t0 + static_cast<double>(i) * dt;
            if (t >= t_discard) {
                out.push_back({t, x[i]});
            }
        }
        i = j + 1;
    }
    return out;
}

std::string_view to_string(AttractorKind kind) noexcept {
    switch (kind) {
        case AttractorKind::FixedPoint: return "fixed_point";
        case AttractorKind::Periodic: return "periodic";
        case AttractorKind::AperiodicLocalized: return "aperiodic_localized";
        case AttractorKind::Switching: return "switching";
        case AttractorKind::Diverged: return "diverged";
    }
    return "unknown";
}

std::string_view to_string(Locus locus) noexcept {
    switch (locus) {
        case Locus::ASide: return "A-side";
        case Locus::BSide: return "B-side";
        case Locus::Both: return "both";
        case Locus::Other: return "other";
    }
    return "unknown";
}

std::vector<std::size_t> cluster_ids(std::span<const double> values, double radius) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::size_t> ids(values.size(), 0);
    std::size_t cluster = 0;
    double anchor = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const double v = values[order[k]];
        if (k == 0) {
            anchor = v;
        } else if (v - anchor > 2.0 * radius) {
            ++cluster;
            anchor = v;
        }
        ids[order[k]] = cluster;
    }
    return ids;
}

namespace {

// The cluster sequence repeats with some period p ≤ max_period.
bool recurs(const std::vector<std::size_t>& ids, std::size_t max_period) {
    for (std::size_t p = 1; p <= max_period; ++p) {
        if (ids.size() < 2 * p) {
            return false;
        }
        bool ok = true;
        for (std::size_t k = p; k < ids.size() && ok; ++k) {
            ok = ids[k] == ids[k - p];
        }
        if (ok) {
            return true;
        }
    }
    return false;
}

}  // namespace

AttractorLabel classify_attractor(const OutputTrajectory& traj, const RelayConfig& relay, const OrbitPair& pair,
                                  double t_discard, const ClassifyOptions& opts) {
    relay.validate();
    std::size_t first = 0;
    while (first < traj.size() && traj.time(first) < t_discard) {
        ++first;
    }
    const double window = traj.size() > first ? traj.time(traj.size() - 1) - traj.time(first) : 0.0;
    if (window + 1e-9 < opts.min_window) {
        throw UsageError("classify_attractor: analysis window of " + std::to_string(window) +
                         " time units is shorter than " + std::to_string(opts.min_window));
    }

    std::vector<double> xs, ts;
    xs.reserve(traj.size() - first);
    ts.reserve(traj.size() - first);
    double x_min = traj.outputs[first][0], x_max = x_min;
    double y_min = traj.outputs[first][1], y_max = y_min;
    double x_sum = 0.0;
    for (std::size_t i = first; i < traj.size(); ++i) {
        const auto& p = traj.outputs[i];
        xs.push_back(p[0]);
        ts.push_back(traj.time(i));
        x_min = std::min(x_min, p[0]);
        x_max = std::max(x_max, p[0]);
        y_min = std::min(y_min, p[1]);
        y_max = std::max(y_max, p[1]);
        x_sum += p[0];
    }
    const double x_mean = x_sum / static_cast<double>(xs.size());

    AttractorLabel label;
    const auto events = relay_transitions(xs, ts, relay);
    if (events.size() >= 2) {
        label.kind = AttractorKind::Switching;
        label.locus = Locus::Both;
        return label;
    }

    if (x_mean >= relay.beta) {
        label.locus = Locus::ASide;
    } else if (x_mean <= relay.alpha) {
        label.locus = Locus::BSide;
    } else {
        label.locus = Locus::Other;
    }
    if (label.locus == Locus::ASide || label.locus == Locus::BSide) {
        const OrbitSpec& orbit = label.locus == Locus::ASide ? pair.orbit_a : pair.orbit_b;
        double dist = 0.0;
        for (std::size_t i = first; i < traj.size(); ++i) {
            dist += std::hypot(traj.outputs[i][0] - orbit.x_cen, traj.outputs[i][1]);
        }
        label.mean_centre_distance = dist / static_cast<double>(xs.size());
    }

    if (x_max - x_min < opts.fixed_point_span && y_max - y_min < opts.fixed_point_span) {
        label.kind = AttractorKind::FixedPoint;
        return label;
    }

    const auto maxima = local_maxima(xs, traj.time(first), traj.dt, traj.time(first));
    std::vector<double> values;
    values.reserve(maxima.size());
    for (const auto& m : maxima) {
        values.push_back(m.value);
    }
    const auto ids = cluster_ids(values, opts.cluster_radius);
    label.n_maxima_clusters = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
    const bool periodic =
        label.n_maxima_clusters >= 1 && label.n_maxima_clusters <= opts.max_clusters && recurs(ids, opts.max_clusters);
    label.kind = periodic ? AttractorKind::Periodic : AttractorKind::AperiodicLocalized;
    return label;
}

AttractorLabel classify_attractor(const OutputRun& run, const RelayConfig& relay, const OrbitPair& pair,
                                  double t_discard, const ClassifyOptions& opts) {
    if (run.diverged) {
        return AttractorLabel{AttractorKind::Diverged, Locus::Other, 0, 0.0};
    }
    return classify_attractor(run.outputs, relay, pair, t_discard, opts);
}

std::optional<double> escape_time_from_series(std::span<const double> x, std::span<const double> t,
                                              const RelayConfig& relay) {
    const auto events = relay_transitions(x, t, relay);
    if (events.empty()) {
        return std::nullopt;
    }
    return events.front().time;
}

SwitchingRun collect_transitions(const ClosedLoopSystem& system, const StateVector& r0, const RelayConfig& relay,
                                 std::size_t target_events, double t_max, std::size_t stride) {
    Relay detector(relay);
    SwitchingRun run;
    run.final_state = r0;
    try {
        run.final_state = integrate_rk4(system, r0, 0.0, t_max, system.time_step(), stride,
                                        [&](std::size_t, double t, const StateVector& r) {
                                            run.t_end = t;
                                            if (auto ev = detector.feed(t, system.output(r)[0])) {
                                                run.events.push_back(*ev);
                                            }
                                            return run.events.size() < target_events;
                                        });
    } catch (const DivergenceError& e) {
        run.diverged = true;
        run.t_end = e.time();
    }
    return run;
}

std::optional<double> escape_time(const TrainedRC& trained, const RelayConfig& relay, double t_max) {
    if (!(t_max > 0.0)) {
        throw UsageError("escape_time: t_max must be positive");
    }
    const ClosedLoopSystem system = trained.closed_loop();
    const SwitchingRun run = collect_transitions(system, trained.init_a, relay, 1, t_max);
    if (run.events.empty()) {
        return std::nullopt;
    }
    return run.events.front().time;
}

}  // namespace rclab
