#pragma once

#include "rclab/dynamics.hpp"
#include "rclab/signal.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rclab {

struct TrainedRC;

// ---------------------------------------------------------------------------
// Non-ideal relay
// ---------------------------------------------------------------------------

struct RelayConfig {
    double alpha = -2.0;  ///< lower threshold: at or below it the relay reads B
    double beta = 2.0;    ///< upper threshold: at or above it the relay reads A

    void validate() const;
};

struct TransitionEvent {
    double time = 0.0;
    OrbitId to_state = OrbitId::A;
    std::size_t index = 0;  ///< sample index in the series that triggered it

    friend bool operator==(const TransitionEvent&, const TransitionEvent&) = default;
};

/// Streaming two-threshold relay.  The first sample outside [alpha, beta]
/// fixes the initial output silently; afterwards only switches are reported.
class Relay {
public:
    explicit Relay(RelayConfig config);

    /// Feeds one sample; returns the switch it caused, if any.
    std::optional<TransitionEvent> feed(double t, double x);

    [[nodiscard]] std::optional<OrbitId> state() const noexcept { return state_; }
    [[nodiscard]] std::optional<OrbitId> initial_state() const noexcept { return initial_; }
    [[nodiscard]] double initial_time() const noexcept { return initial_time_; }

private:
    RelayConfig config_;
    std::optional<OrbitId> state_;
    std::optional<OrbitId> initial_;
    double initial_time_ = 0.0;
    std::size_t index_ = 0;
};

/// Relay events for a series sampled at times `t` (same length as `x`).
std::vector<TransitionEvent> relay_transitions(std::span<const double> x, std::span<const double> t,
                                               const RelayConfig& relay);

/// Sign changes about zero (zero counts as positive).
std::size_t zero_crossings(std::span<const double> x);

// ---------------------------------------------------------------------------
// Residence times and log-binned densities
// ---------------------------------------------------------------------------

struct ResidenceSample {
    OrbitId state = OrbitId::A;
    double duration = 0.0;
};

/// Dwell between consecutive events; the trailing open dwell is dropped.
/// Throws UsageError unless events alternate with strictly increasing times.
std::vector<ResidenceSample> residence_times(std::span<const TransitionEvent> events);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double density = 0.0;
};

/// Geometrically spaced bins from lo to hi.  Samples outside [lo, hi] are not
/// counted; a sample equal to hi lands in the last bin.  Densities are
/// normalized over the counted samples so that Σ density·width = 1.
std::vector<HistogramBin> log_histogram(std::span<const double> durations, std::size_t n_bins, double lo,
                                        double hi);

// ---------------------------------------------------------------------------
// Local maxima and attractor classification
// ---------------------------------------------------------------------------

struct LocalMaximum {
    double time = 0.0;
    double value = 0.0;
};

/// Interior local maxima of a uniformly sampled series with time ≥ t_discard.
/// A flat run that rises into and falls out of a common value reports its
/// first sample.
std::vector<LocalMaximum> local_maxima(std::span<const double> x, double t0, double dt, double t_discard);

enum class AttractorKind { FixedPoint, Periodic, AperiodicLocalized, Switching, Diverged };
enum class Locus { ASide, BSide, Both, Other };

std::string_view to_string(AttractorKind kind) noexcept;
std::string_view to_string(Locus locus) noexcept;

struct AttractorLabel {
    AttractorKind kind = AttractorKind::FixedPoint;
    Locus locus = Locus::Other;
    std::size_t n_maxima_clusters = 0;
    /// Mean distance of the window's outputs from the centre of the orbit on
    /// the labelled side (0 for Both/Other).
    double mean_centre_distance = 0.0;

    friend bool operator==(const AttractorLabel& a, const AttractorLabel& b) {
        return a.kind == b.kind && a.locus == b.locus && a.n_maxima_clusters == b.n_maxima_clusters;
    }
};

struct ClassifyOptions {
    double fixed_point_span = 0.05;
    double cluster_radius = 0.05;
    std::size_t max_clusters = 8;
    double min_window = 50.0;
};

/// Groups values into clusters of radius `radius` (greedy over the sorted
/// values) and returns each value's cluster id; ids are 0..n-1 in ascending
/// value order.
std::vector<std::size_t> cluster_ids(std::span<const double> values, double radius);

AttractorLabel classify_attractor(const OutputTrajectory& traj, const RelayConfig& relay, const OrbitPair& pair,
                                  double t_discard, const ClassifyOptions& opts = {});

/// As above; a diverged run is labelled Diverged without inspection.
AttractorLabel classify_attractor(const OutputRun& run, const RelayConfig& relay, const OrbitPair& pair,
                                  double t_discard, const ClassifyOptions& opts = {});

// ---------------------------------------------------------------------------
// Escape time
// ---------------------------------------------------------------------------

/// Time of the first relay switch in a sampled series (none if it never switches).
std::optional<double> escape_time_from_series(std::span<const double> x, std::span<const double> t,
                                              const RelayConfig& relay);

/// Runs the closed loop from init_a and returns the time of the first relay
/// switch, or none if the relay holds until t_max.
std::optional<double> escape_time(const TrainedRC& trained, const RelayConfig& relay, double t_max);

/// Streams a closed-loop run through the relay, keeping only the events.
struct SwitchingRun {
    std::vector<TransitionEvent> events;
    double t_end = 0.0;
    bool diverged = false;
    StateVector final_state;
};

/// Integrates until `target_events` switches are seen or t_max is reached.
SwitchingRun collect_transitions(const ClosedLoopSystem& system, const StateVector& r0, const RelayConfig& relay,
                                 std::size_t target_events, double t_max, std::size_t stride = 1);

}  // namespace rclab
