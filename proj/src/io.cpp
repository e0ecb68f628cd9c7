#include "rclab/io.hpp"

#include "rclab/errors.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <system_error>

namespace rclab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

namespace {

constexpr int kFormatVersion = 1;

json vector_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Vector vector_from_json(const json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw ConfigError(std::string("container is missing field '") + key + "'");
    }
    return j.at(key).get<T>();
}

}  // namespace

json to_json(const SparseMatrix& m) {
    json rows = json::array(), cols = json::array(), vals = json::array();
    for (const auto& t : m.triplets()) {
        rows.push_back(t.row);
        cols.push_back(t.col);
        vals.push_back(t.value);
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"i", rows}, {"j", cols}, {"v", vals}};
}

SparseMatrix sparse_from_json(const json& j) {
    const auto& is = j.at("i");
    const auto& js = j.at("j");
    const auto& vs = j.at("v");
    if (is.size() != js.size() || is.size() != vs.size()) {
        throw ConfigError("sparse matrix container has ragged triplet arrays");
    }
    std::vector<Triplet> triplets;
    triplets.reserve(is.size());
    for (std::size_t k = 0; k < is.size(); ++k) {
        triplets.push_back({is[k].get<std::size_t>(), js[k].get<std::size_t>(), vs[k].get<double>()});
    }
    return SparseMatrix::from_triplets(field<std::size_t>(j, "rows"), field<std::size_t>(j, "cols"), triplets);
}

json to_json(const DenseMatrix& m) {
    json data = json::array();
    // Row-major, regardless of Eigen's storage order.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c));
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

DenseMatrix dense_from_json(const json& j) {
    const auto rows = field<Eigen::Index>(j, "rows");
    const auto cols = field<Eigen::Index>(j, "cols");
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw ConfigError("dense matrix container has the wrong number of entries");
    }
    DenseMatrix m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = data[k++].get<double>();
        }
    }
    return m;
}

json to_json(const ReservoirConfig& c) {
    return {{"n_neurons", c.n_neurons},   {"input_dim", c.input_dim},   {"connect_prob", c.connect_prob},
            {"spectral_radius", c.spectral_radius}, {"input_scale", c.input_scale}, {"decay_rate", c.decay_rate},
            {"time_step", c.time_step},   {"seed", c.seed}};
}

ReservoirConfig reservoir_config_from_json(const json& j) {
    ReservoirConfig c;
    c.n_neurons = field<std::size_t>(j, "n_neurons");
    c.input_dim = field<std::size_t>(j, "input_dim");
    c.connect_prob = field<double>(j, "connect_prob");
    c.spectral_radius = field<double>(j, "spectral_radius");
    c.input_scale = field<double>(j, "input_scale");
    c.decay_rate = field<double>(j, "decay_rate");
    c.time_step = field<double>(j, "time_step");
    c.seed = field<std::uint64_t>(j, "seed");
    c.validate();
    return c;
}

json to_json(const ReservoirWeights& w, const ReservoirConfig& c) {
    return {{"format", "rclab-weights"}, {"version", kFormatVersion}, {"config", to_json(c)},
            {"rho", w.rho},              {"m_base", to_json(w.m_base)}, {"m", to_json(w.m)},
            {"w_in", to_json(w.w_in)}};
}

std::pair<ReservoirWeights, ReservoirConfig> weights_from_json(const json& j) {
    if (field<std::string>(j, "format") != "rclab-weights") {
        throw ConfigError("not a weights container");
    }
    if (field<int>(j, "version") != kFormatVersion) {
        throw ConfigError("unsupported weights container version");
    }
    ReservoirWeights w{sparse_from_json(j.at("m_base")), sparse_from_json(j.at("m")),
                       dense_from_json(j.at("w_in")), field<double>(j, "rho")};
    return {std::move(w), reservoir_config_from_json(j.at("config"))};
}

json to_json(const TrainedRC& t) {
    return {{"format", "rclab-trained"},
            {"version", kFormatVersion},
            {"weights", to_json(t.weights, t.config)},
            {"training",
             {{"t_listen", t.training.t_listen}, {"t_train", t.training.t_train}, {"ridge", t.training.ridge}}},
            {"x_cen", t.pair.x_cen()},
            {"radius", t.pair.radius()},
            {"w_out", to_json(t.w_out)},
            {"init_a", vector_json(t.init_a)},
            {"init_b", vector_json(t.init_b)},
            {"normal_residual", t.normal_residual}};
}

TrainedRC trained_from_json(const json& j) {
    if (field<std::string>(j, "format") != "rclab-trained") {
        throw ConfigError("not a trained reservoir container");
    }
    if (field<int>(j, "version") != kFormatVersion) {
        throw ConfigError("unsupported trained reservoir container version");
    }
    auto [weights, config] = weights_from_json(j.at("weights"));
    TrainedRC t;
    t.weights = std::move(weights);
    t.config = config;
    const auto& tr = j.at("training");
    t.training.t_listen = field<double>(tr, "t_listen");
    t.training.t_train = field<double>(tr, "t_train");
    t.training.ridge = field<double>(tr, "ridge");
    t.pair = make_orbit_pair(field<double>(j, "x_cen"), field<double>(j, "radius"));
    t.w_out = dense_from_json(j.at("w_out"));
    t.init_a = vector_from_json(j.at("init_a"));
    t.init_b = vector_from_json(j.at("init_b"));
    t.normal_residual = field<double>(j, "normal_residual");
    const auto n = static_cast<Eigen::Index>(t.weights.m.rows());
    if (t.init_a.size() != n || t.init_b.size() != n || t.w_out.cols() != 2 * n ||
        t.w_out.rows() != static_cast<Eigen::Index>(t.config.input_dim)) {
        throw ConfigError("trained reservoir container has inconsistent dimensions");
    }
    return t;
}

void save_trained(const TrainedRC& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << to_json(t).dump() << '\n';
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

TrainedRC load_trained(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    try {
        return trained_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Configuration files
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, std::string_view text) {
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError("key '" + key + "': '" + std::string(text) + "' is not a finite number");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("key '" + key + "': '" + std::string(text) + "' is not a non-negative integer");
    }
    return v;
}

}  // namespace

const std::set<std::string>& ExperimentConfig::known_keys() {
    static const std::set<std::string> keys{
        // reservoir
        "seed", "n_neurons", "connect_prob", "spectral_radius", "input_scale", "decay_rate", "time_step",
        // training task
        "t_listen", "t_train", "ridge", "x_cen", "radius",
        // relay
        "relay_alpha", "relay_beta",
        // sweep
        "rho_start", "rho_end", "rho_step", "window", "direction", "record_stride",
        // predict
        "duration", "init",
        // residence
        "target_switches", "t_max", "n_bins", "hist_lo", "hist_hi",
        // escape
        "escape_grid", "escape_t_max",
        // switching search
        "search_grid", "search_t_max", "search_min_events",
        // probe
        "n_probes", "box_radius", "probe_window",
        // output
        "output_dir"};
    return keys;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& origin) {
    ExperimentConfig cfg;
    cfg.origin_ = origin;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto where = origin + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(where + ": expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            throw ConfigError(where + ": empty key or value");
        }
        if (!known_keys().count(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
        if (!cfg.values_.emplace(key, value).second) {
            throw ConfigError(where + ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) {
        throw ConfigError("unknown key '" + key + "'");
    }
    values_[key] = value;
}

void ExperimentConfig::require(std::initializer_list<std::string_view> keys) const {
    for (const auto k : keys) {
        if (!values_.count(std::string(k))) {
            throw ConfigError(origin_ + ": missing required key '" + std::string(k) + "'");
        }
    }
}

std::string ExperimentConfig::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError(origin_ + ": missing required key '" + key + "'");
    }
    return it->second;
}

double ExperimentConfig::get_double(const std::string& key) const { return parse_double(key, get_string(key)); }

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const { return parse_u64(key, get_string(key)); }

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
    const std::string text = get_string(key);
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::string_view rest = text;
        while (true) {
            const auto c = rest.find(':');
            parts.push_back(parse_double(key, rest.substr(0, c)));
            if (c == std::string_view::npos) {
                break;
            }
            rest = rest.substr(c + 1);
        }
        if (parts.size() != 3 || !(parts[1] > 0.0) || parts[2] < parts[0]) {
            throw ConfigError("key '" + key + "': range must be start:step:end with step > 0 and end >= start");
        }
        const auto n = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
        for (std::size_t k = 0; k <= n; ++k) {
            out.push_back(std::round((parts[0] + static_cast<double>(k) * parts[1]) * 1e12) / 1e12);
        }
        return out;
    }
    std::string_view rest = text;
    while (true) {
        const auto c = rest.find(',');
        out.push_back(parse_double(key, rest.substr(0, c)));
        if (c == std::string_view::npos) {
            break;
        }
        rest = rest.substr(c + 1);
    }
    return out;
}

std::string ExperimentConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (k == "output_dir") {
            continue;  // where results go does not change them
        }
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

std::string ExperimentConfig::sha256() const { return sha256_hex(canonical()); }

ReservoirConfig ExperimentConfig::reservoir() const {
    ReservoirConfig c;
    c.seed = get_u64("seed");
    c.n_neurons = get_u64("n_neurons", c.n_neurons);
    c.connect_prob = get_double("connect_prob", c.connect_prob);
    c.spectral_radius = get_double("spectral_radius", c.spectral_radius);
    c.input_scale = get_double("input_scale", c.input_scale);
    c.decay_rate = get_double("decay_rate", c.decay_rate);
    c.time_step = get_double("time_step", c.time_step);
    c.validate();
    return c;
}

TrainingConfig ExperimentConfig::training() const {
    TrainingConfig t;
    t.t_listen = get_double("t_listen", t.t_listen);
    t.t_train = get_double("t_train", t.t_train);
    t.ridge = get_double("ridge", t.ridge);
    t.validate();
    return t;
}

RelayConfig ExperimentConfig::relay() const {
    RelayConfig r;
    r.alpha = get_double("relay_alpha", r.alpha);
    r.beta = get_double("relay_beta", r.beta);
    r.validate();
    return r;
}

SweepConfig ExperimentConfig::sweep() const {
    SweepConfig s;
    s.rho_start = get_double("rho_start", s.rho_start);
    s.rho_end = get_double("rho_end", s.rho_end);
    s.rho_step = get_double("rho_step", s.rho_step);
    s.window = get_double("window", s.window);
    s.x_cen = get_double("x_cen", s.x_cen);
    s.radius = get_double("radius", s.radius);
    s.record_stride = get_u64("record_stride", s.record_stride);
    const std::string dir = get_string("direction", "down");
    if (dir == "down") {
        s.direction = SweepDirection::Down;
    } else if (dir == "up") {
        s.direction = SweepDirection::Up;
    } else {
        throw ConfigError("key 'direction': expected 'down' or 'up', got '" + dir + "'");
    }
    s.validate();
    return s;
}

std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_double: buffer too small");
    }
    return std::string(buf, ptr);
}

void write_csv_preamble(std::ostream& out, const Provenance& prov, std::string_view header) {
    out << "# seed=" << prov.seed << '\n';
    out << "# config_sha=" << prov.config_sha << '\n';
    out << "# tool_version=" << kToolVersion << '\n';
    for (const auto& [k, v] : prov.extra) {
        out << "# " << k << '=' << v << '\n';
    }
    out << header << '\n';
}

void write_output_csv(std::ostream& out, const Provenance& prov, const OutputTrajectory& traj) {
    write_csv_preamble(out, prov, "t,x,y");
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_double(traj.time(i)) << ',' << format_double(traj.outputs[i][0]) << ','
            << format_double(traj.outputs[i][1]) << '\n';
    }
}

void write_state_csv(std::ostream& out, const Provenance& prov, const StateTrajectory& traj) {
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    std::string header = "t";
    for (Eigen::Index k = 0; k < n; ++k) {
        header += ",r_" + std::to_string(k);
    }
    write_csv_preamble(out, prov, header);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_double(traj.time(i));
        for (Eigen::Index k = 0; k < n; ++k) {
            out << ',' << format_double(traj.states[i][k]);
        }
        out << '\n';
    }
}

void write_residence_csv(std::ostream& out, const Provenance& prov, const std::vector<ResidenceSample>& samples) {
    write_csv_preamble(out, prov, "state,duration");
    for (const auto& s : samples) {
        out << to_string(s.state) << ',' << format_double(s.duration) << '\n';
    }
}

void write_histogram_csv(std::ostream& out, const Provenance& prov, const std::vector<HistogramBin>& bins) {
    write_csv_preamble(out, prov, "bin_lo,bin_hi,count,density");
    for (const auto& b : bins) {
        out << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << ','
            << format_double(b.density) << '\n';
    }
}

void write_transitions_csv(std::ostream& out, const Provenance& prov, const std::vector<TransitionEvent>& events) {
    write_csv_preamble(out, prov, "time,to_state");
    for (const auto& e : events) {
        out << format_double(e.time) << ',' << to_string(e.to_state) << '\n';
    }
}

void write_escape_csv(std::ostream& out, const Provenance& prov,
                      const std::vector<std::pair<double, std::optional<double>>>& rows) {
    write_csv_preamble(out, prov, "rho,t_esc");
    for (const auto& [rho, t] : rows) {
        out << format_double(rho) << ',' << (t ? format_double(*t) : std::string()) << '\n';
    }
}

void write_bifurcation_csv(std::ostream& out, const Provenance& prov, const std::vector<ContinuationStep>& steps) {
    write_csv_preamble(out, prov, "rho,branch,x_m");
    for (const auto& s : steps) {
        for (const double x : s.x_m) {
            out << format_double(s.rho) << ',' << s.branch << ',' << format_double(x) << '\n';
        }
    }
}

void write_labels_csv(std::ostream& out, const Provenance& prov, const std::vector<ContinuationStep>& steps) {
    write_csv_preamble(out, prov, "rho,branch,kind,locus,n_clusters");
    for (const auto& s : steps) {
        out << format_double(s.rho) << ',' << s.branch << ',' << to_string(s.label.kind) << ','
            << to_string(s.label.locus) << ',' << s.label.n_maxima_clusters << '\n';
    }
}

void write_probe_csv(std::ostream& out, const Provenance& prov, const std::vector<AttractorLabel>& labels) {
    write_csv_preamble(out, prov, "probe,kind,locus,n_clusters");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << i << ',' << to_string(labels[i].kind) << ',' << to_string(labels[i].locus) << ','
            << labels[i].n_maxima_clusters << '\n';
    }
}

}  // namespace rclab
