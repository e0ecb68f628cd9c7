#include "rclab/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rclab;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "seed = 3\n"
    "n_neurons = 60\n"
    "connect_prob = 0.1\n"
    "spectral_radius = 0.5\n"
    "t_listen = 5\n"
    "t_train = 20\n"
    "x_cen = 8\n";

struct Workspace {
    fs::path root;
    explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("rclab_cli_" + name)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(root / name) << text;
        return root / name;
    }
    std::string read(const fs::path& rel) const {
        std::ifstream in(root / rel);
        std::stringstream s;
        s << in.rdbuf();
        return s.str();
    }
};

int run(std::vector<std::string> args, std::string* log_out = nullptr) {
    std::ostringstream log;
    const int code = run_cli(args, log);
    if (log_out) *log_out = log.str();
    return code;
}

std::size_t data_rows(const std::string& csv) {
    std::size_t rows = 0;
    std::istringstream in(csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        ++rows;
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("config errors map to exit code 2") {
        Workspace ws("config");
        std::string log;
        const auto missing = ws.write("missing.cfg", "x_cen = 8\n");
        CHECK(run({"train", "--config", missing.string(), "--out", ws.root.string()}, &log) == kExitConfig);
        CHECK(log.find("'seed'") != std::string::npos);

        const auto unknown = ws.write("unknown.cfg", std::string(kSmall) + "colour = red\n");
        CHECK(run({"train", "--config", unknown.string(), "--out", ws.root.string()}, &log) == kExitConfig);
        CHECK(log.find("colour") != std::string::npos);

        CHECK(run({"train", "--config", (ws.root / "absent.cfg").string()}) == kExitConfig);
        CHECK(run({"nonsense"}) == kExitConfig);
        CHECK(run({}) == kExitConfig);
        CHECK(run({"--help"}) == kExitOk);
    }

    TEST_CASE("train then predict") {
        Workspace ws("predict");
        const auto cfg = ws.write("small.cfg", kSmall);
        const auto out1 = (ws.root / "one").string(), out2 = (ws.root / "two").string();
        REQUIRE(run({"train", "--config", cfg.string(), "--out", out1}) == kExitOk);
        REQUIRE(run({"train", "--config", cfg.string(), "--out", out2}) == kExitOk);
        CHECK(ws.read("one/trained.json") == ws.read("two/trained.json"));
        CHECK(ws.read("one/fit_report.csv") == ws.read("two/fit_report.csv"));
        CHECK(ws.read("one/fit_report.csv").rfind("# seed=3\n# config_sha=", 0) == 0);

        const auto trained = (ws.root / "one" / "trained.json").string();
        REQUIRE(run({"predict", "--trained", trained, "--init", "B", "--duration", "0", "--out", out1}) == kExitOk);
        CHECK(data_rows(ws.read("one/prediction.csv")) == 1);

        REQUIRE(run({"predict", "--trained", trained, "--duration", "1", "--states", "--out", out1}) == kExitOk);
        CHECK(data_rows(ws.read("one/prediction.csv")) == 101);
        CHECK(data_rows(ws.read("one/states.csv")) == 101);
        CHECK(ws.read("one/states.csv").find("t,r_0,r_1,") != std::string::npos);

        const auto short_state = ws.write("short.txt", "0.1 0.2 0.3\n");
        CHECK(run({"predict", "--trained", trained, "--init", short_state.string(), "--out", out1}) == kExitConfig);

        std::string big;
        for (int i = 0; i < 60; ++i) big += "100\n";
        const auto wild = ws.write("wild.txt", big);
        CHECK(run({"predict", "--trained", trained, "--init", wild.string(), "--out", out1}) == kExitNumeric);

        // --seed overrides the config and changes the realization.
        REQUIRE(run({"train", "--config", cfg.string(), "--seed", "4", "--out", out2}) == kExitOk);
        CHECK(ws.read("two/trained.json") != ws.read("one/trained.json"));
        CHECK(ws.read("two/fit_report.csv").rfind("# seed=4\n", 0) == 0);
    }

    TEST_CASE("output directory from the environment") {
        Workspace ws("env");
        const auto cfg = ws.write("small.cfg", kSmall);
        const auto target = ws.root / "from_env";
        ::setenv("RCLAB_OUT", target.c_str(), 1);
        const int code = run({"train", "--config", cfg.string()});
        ::unsetenv("RCLAB_OUT");
        REQUIRE(code == kExitOk);
        CHECK(fs::exists(target / "trained.json"));
    }

    TEST_CASE("residence without switching warns about truncation") {
        Workspace ws("residence");
        const auto cfg = ws.write("calm.cfg", std::string(kSmall) + "target_switches = 5\nt_max = 20\n");
        CHECK(run({"residence", "--config", cfg.string(), "--out", ws.root.string()}) == kExitTruncated);
        CHECK(data_rows(ws.read("residence.csv")) == 0);
        CHECK(ws.read("residence.csv").find("state,duration") != std::string::npos);
        CHECK(data_rows(ws.read("histogram.csv")) == 0);
    }

    TEST_CASE("escape grids") {
        Workspace ws("escape");
        const auto cfg = ws.write("esc.cfg", std::string(kSmall) + "escape_grid = 0.5\nescape_t_max = 10\n");
        REQUIRE(run({"escape", "--config", cfg.string(), "--out", ws.root.string()}) == kExitOk);
        CHECK(data_rows(ws.read("escape.csv")) == 1);

        const auto cfg2 = ws.write("esc2.cfg", std::string(kSmall) + "escape_grid = 0.3:0.1:0.5\nescape_t_max = 0.05\n");
        REQUIRE(run({"escape", "--config", cfg2.string(), "--out", ws.root.string(), "--jobs", "2"}) == kExitOk);
        const std::string csv = ws.read("escape.csv");
        CHECK(csv.find("rho,t_esc\n0.3,\n0.4,\n0.5,\n") != std::string::npos);
    }

    TEST_CASE("probe and sweep outputs") {
        Workspace ws("sweep");
        const auto cfg = ws.write("sw.cfg", std::string(kSmall) +
                                                "rho_start = 0.5\nrho_end = 0.45\nrho_step = 0.05\nwindow = 60\n"
                                                "n_probes = 3\nprobe_window = 60\n");
        REQUIRE(run({"sweep", "--config", cfg.string(), "--out", ws.root.string(), "--jobs", "2"}) == kExitOk);
        CHECK(data_rows(ws.read("labels.csv")) == 4);
        CHECK(ws.read("bifurcation.csv").find("rho,branch,x_m\n") != std::string::npos);
        const std::string first = ws.read("labels.csv");
        REQUIRE(run({"sweep", "--config", cfg.string(), "--out", ws.root.string()}) == kExitOk);
        CHECK(ws.read("labels.csv") == first);

        REQUIRE(run({"probe", "--config", cfg.string(), "--out", ws.root.string()}) == kExitOk);
        CHECK(data_rows(ws.read("probe.csv")) == 3);
        REQUIRE(run({"probe", "--config", cfg.string(), "--n", "2", "--box", "0", "--out", ws.root.string()}) ==
                kExitOk);
        CHECK(data_rows(ws.read("probe.csv")) == 2);
    }
}
