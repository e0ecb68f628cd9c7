#pragma once

#include "rclab/analysis.hpp"
#include "rclab/reservoir.hpp"
#include "rclab/training.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rclab {

enum class SweepDirection { Down, Up };

struct SweepConfig {
    double rho_start = 0.7;
    double rho_end = 0.1;
    double rho_step = 0.001;
    double window = 200.0;
    SweepDirection direction = SweepDirection::Down;
    double x_cen = 6.5;
    double radius = 5.0;
    /// Closed-loop recording stride in time steps.
    std::size_t record_stride = 10;
    /// Worker threads for the branches at one ρ.
    std::size_t jobs = 1;

    void validate() const;
};

/// Spectral radii visited by a sweep, endpoints included when they fall on
/// the step grid.
std::vector<double> sweep_grid(const SweepConfig& sweep);

struct ContinuationStep {
    double rho = 0.0;
    std::string branch;
    std::vector<double> x_m;
    AttractorLabel label;
    StateVector final_state;
};

struct BranchSeed {
    std::string name;
    /// Empty: seed from the training end state of `orbit` at the first ρ.
    StateVector state;
    OrbitId orbit = OrbitId::A;
};

using StepCallback = std::function<void(const ContinuationStep&)>;

/// Tracks every seeded branch across the ρ grid of `sweep` on one reservoir
/// realization, retraining the readout at each ρ and carrying each branch's
/// final state to the next ρ.  A diverged branch is recorded once and then
/// frozen.
std::vector<ContinuationStep> track_branches(const ReservoirWeights& base, const ReservoirConfig& rc,
                                             const TrainingConfig& tc, const SweepConfig& sweep,
                                             const std::vector<BranchSeed>& seeds, const RelayConfig& relay = {},
                                             const StepCallback& on_step = {});

/// Down-sweep seeded with branches "A" and "B" from the training end states.
std::vector<ContinuationStep> continuation_sweep(const ReservoirConfig& rc, const TrainingConfig& tc,
                                                 const SweepConfig& sweep, const RelayConfig& relay = {},
                                                 const StepCallback& on_step = {});

/// Follows the attractor reached in `from` for increasing ρ (sweep.rho_start
/// is replaced by from.rho and the direction forced upward).
std::vector<ContinuationStep> reverse_track(const ReservoirConfig& rc, const TrainingConfig& tc,
                                            const ContinuationStep& from, SweepConfig sweep,
                                            const RelayConfig& relay = {}, const StepCallback& on_step = {});

/// Last ρ of a tracked branch (in visiting order) before its label first
/// changes kind; returns the final ρ if it never changes.
double last_rho_with_kind(const std::vector<ContinuationStep>& steps, const std::string& branch, AttractorKind kind);

struct ProbeConfig {
    std::size_t n = 20;
    double box_radius = 0.5;
    double window = 200.0;
    std::size_t record_stride = 10;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
};

/// Closed-loop runs from uniform random states in [−box, box]^N, each
/// classified on the second half of its window.  Probe i draws from its own
/// substream, so labels do not depend on evaluation order.
std::vector<AttractorLabel> random_ic_probe(const TrainedRC& trained, const ProbeConfig& probe,
                                            const RelayConfig& relay = {});

// ---------------------------------------------------------------------------
// Independent grid scans (one retraining per ρ, no state carried between points)
// ---------------------------------------------------------------------------

struct SwitchCount {
    double rho = 0.0;
    std::size_t events = 0;
    bool diverged = false;
};

/// Relay switches of the closed loop started from init_a within t_max, per ρ.
/// Each run stops once `event_cap` switches are seen (0 means no cap).
std::vector<SwitchCount> count_switches(const ReservoirWeights& base, const ReservoirConfig& rc,
                                        const TrainingConfig& tc, const OrbitPair& pair,
                                        const std::vector<double>& grid, const RelayConfig& relay, double t_max,
                                        std::size_t event_cap = 0, std::size_t jobs = 1);

struct EscapePoint {
    double rho = 0.0;
    std::optional<double> t_esc;
};

/// Escape time from init_a at every ρ of `grid`.
std::vector<EscapePoint> escape_scan(const ReservoirWeights& base, const ReservoirConfig& rc,
                                     const TrainingConfig& tc, const OrbitPair& pair,
                                     const std::vector<double>& grid, const RelayConfig& relay, double t_max,
                                     std::size_t jobs = 1);

}  // namespace rclab
