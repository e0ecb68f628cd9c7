#pragma once

#include "rclab/analysis.hpp"
#include "rclab/continuation.hpp"
#include "rclab/reservoir.hpp"
#include "rclab/training.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rclab {

inline constexpr std::string_view kToolVersion = "0.3.1";

// ---------------------------------------------------------------------------
// Containers (JSON; doubles are written in shortest round-trip form)
// ---------------------------------------------------------------------------

nlohmann::json to_json(const SparseMatrix& m);
SparseMatrix sparse_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DenseMatrix& m);
DenseMatrix dense_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReservoirConfig& c);
ReservoirConfig reservoir_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ReservoirWeights& w, const ReservoirConfig& c);
/// Returns the weights and the configuration they were built from.
std::pair<ReservoirWeights, ReservoirConfig> weights_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainedRC& t);
TrainedRC trained_from_json(const nlohmann::json& j);

void save_trained(const TrainedRC& t, const std::filesystem::path& path);
TrainedRC load_trained(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Flat `key = value` configuration files
// ---------------------------------------------------------------------------

class ExperimentConfig {
public:
    /// Parses `key = value` lines; `#` starts a comment.  Throws ConfigError on
    /// malformed lines, duplicate keys or keys outside the known set.
    static ExperimentConfig parse(std::string_view text, const std::string& origin = "<string>");
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Every key the tool understands.
    static const std::set<std::string>& known_keys();

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);

    /// Throws ConfigError naming the first missing key.
    void require(std::initializer_list<std::string_view> keys) const;

    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key) const;
    [[nodiscard]] std::uint64_t get_u64(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    /// Comma-separated reals, or `start:step:end` (end included when on grid).
    [[nodiscard]] std::vector<double> get_list(const std::string& key) const;

    /// Canonical `key=value` lines sorted by key; hashed for provenance.
    [[nodiscard]] std::string canonical() const;
    [[nodiscard]] std::string sha256() const;

    [[nodiscard]] ReservoirConfig reservoir() const;
    [[nodiscard]] TrainingConfig training() const;
    [[nodiscard]] RelayConfig relay() const;
    [[nodiscard]] SweepConfig sweep() const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

struct Provenance {
    std::uint64_t seed = 0;
    std::string config_sha;
    std::vector<std::pair<std::string, std::string>> extra;
};

/// Writes the `# seed=`, `# config_sha=`, `# tool_version=` comment block, any
/// extra `# key=value` lines, then the header row.
void write_csv_preamble(std::ostream& out, const Provenance& prov, std::string_view header);

void write_output_csv(std::ostream& out, const Provenance& prov, const OutputTrajectory& traj);
void write_state_csv(std::ostream& out, const Provenance& prov, const StateTrajectory& traj);
void write_residence_csv(std::ostream& out, const Provenance& prov, const std::vector<ResidenceSample>& samples);
void write_histogram_csv(std::ostream& out, const Provenance& prov, const std::vector<HistogramBin>& bins);
void write_transitions_csv(std::ostream& out, const Provenance& prov, const std::vector<TransitionEvent>& events);
void write_escape_csv(std::ostream& out, const Provenance& prov,
                      const std::vector<std::pair<double, std::optional<double>>>& rows);
void write_bifurcation_csv(std::ostream& out, const Provenance& prov, const std::vector<ContinuationStep>& steps);
void write_labels_csv(std::ostream& out, const Provenance& prov, const std::vector<ContinuationStep>& steps);
void write_probe_csv(std::ostream& out, const Provenance& prov, const std::vector<AttractorLabel>& labels);

}  // namespace rclab
