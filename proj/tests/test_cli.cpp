#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "engagemax/cli_runner.hpp"
#include "engagemax/errors.hpp"

using namespace engagemax;

namespace {

const char* kBaseConfig = R"json({
  "schema": 1,
  "problem": {
    "states": ["L", "R"],
    "actions": ["l", "r"],
    "utility": [[1, -1], [-1, 1]],
    "prior": [0.5, 0.5],
    "kappa": 2.0,
    "chi": 1.0,
    "rho": 1.0
  },
  "command": {"grid_points": 5, "grid_lo": 0.4, "grid_hi": 0.6, "samples": 2000, "seed": 9},
  "output": {"directory": "", "prefix": "t"}
})json";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config round-trips through serialization") {
    const ScenarioConfig a = parse_config(kBaseConfig);
    const std::string text = serialize_config(a);
    const ScenarioConfig b = parse_config(text);
    CHECK(serialize_config(b) == text);
    CHECK(b.states == a.states);
    CHECK(b.utility == a.utility);
    CHECK(b.prior == a.prior);
    CHECK(b.kappa == a.kappa);
    CHECK(b.grid_points == a.grid_points);
    CHECK(b.samples == a.samples);
    CHECK(b.prefix == a.prefix);
}

TEST_CASE("unknown keys are rejected with their path") {
    const std::string bad = R"({"schema":1,"problem":{"states":["L","R"],"actions":["l","r"],
        "utility":[[1,-1],[-1,1]],"prior":[0.5,0.5],"kappa":2.0,"chi":1.0,"rho":1.0,
        "kapa":3.0}})";
    try {
        parse_config(bad);
        FAIL("expected input_error");
    } catch (const input_error& e) {
        CHECK(std::string(e.what()).find("problem.kapa") != std::string::npos);
    }
    const std::string bad2 = R"({"schema":1,"problemz":{}})";
    CHECK_THROWS_AS(parse_config(bad2), input_error);
}

TEST_CASE("malformed prior names the field") {
    const std::string bad = R"({"schema":1,"problem":{"states":["L","R"],"actions":["l","r"],
        "utility":[[1,-1],[-1,1]],"prior":[0.5,0.4],"kappa":2.0,"chi":1.0,"rho":1.0}})";
    try {
        parse_config(bad);
        FAIL("expected input_error");
    } catch (const input_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("problem.prior") != std::string::npos);
        CHECK(msg.find("0.9") != std::string::npos);
    }
}

TEST_CASE("missing keys and bad schema are parse errors") {
    CHECK_THROWS_AS(parse_config("{\"schema\": 2}"), input_error);
    CHECK_THROWS_AS(parse_config("{\"schema\": 1}"), input_error);
    CHECK_THROWS_AS(parse_config("not json"), input_error);
}

TEST_CASE("example-1-1 prints the worked quantities") {
    std::ostringstream out;
    const int rc = run_subcommand("example-1-1", std::nullopt, {}, out);
    CHECK(rc == 0);
    const std::string s = out.str();
    CHECK(s.find("V_B = 0.240229013917") != std::string::npos);
    CHECK(s.find("V_B_tilde = 0.0231901731513") != std::string::npos);
    CHECK(s.find("alpha_inv = 0.110944071672") != std::string::npos);
    CHECK(s.find("alpha_tilde_inv = 0.404181105023") != std::string::npos);
}

TEST_CASE("unknown subcommand and operation mismatch") {
    std::ostringstream out;
    CHECK_THROWS_AS(run_subcommand("frobnicate", std::nullopt, {}, out), input_error);
    ScenarioConfig cfg = parse_config(kBaseConfig);
    cfg.operation = "sweep";
    CHECK_THROWS_AS(run_subcommand("solve", cfg, {}, out), input_error);
    // Subcommands that need a problem reject a missing config.
    CHECK_THROWS_AS(run_subcommand("solve", std::nullopt, {}, out), input_error);
}

TEST_CASE("sweep and simulate write deterministic csv artifacts") {
    const auto dir = std::filesystem::temp_directory_path() / "engagemax_cli_test";
    std::filesystem::remove_all(dir);
    ScenarioConfig cfg = parse_config(kBaseConfig);
    cfg.directory = (dir / "a").string();
    std::ostringstream out;
    CHECK(run_subcommand("sweep", cfg, {}, out) == 0);
    CHECK(run_subcommand("simulate", cfg, {}, out) == 0);
    cfg.directory = (dir / "b").string();
    CHECK(run_subcommand("sweep", cfg, {}, out) == 0);
    CHECK(run_subcommand("simulate", cfg, {}, out) == 0);

    const std::string sweep_a = slurp(dir / "a" / "t_sweep.csv");
    CHECK(sweep_a == slurp(dir / "b" / "t_sweep.csv"));
    CHECK(slurp(dir / "a" / "t_paths.csv") == slurp(dir / "b" / "t_paths.csv"));

    // Header row plus one row per grid point; 12 significant digits.
    CHECK(sweep_a.rfind("prior,", 0) == 0);
    CHECK(sweep_a.find("0.73105857863") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("output directory precedence: flag over config over environment") {
    const auto dir = std::filesystem::temp_directory_path() / "engagemax_cli_env";
    std::filesystem::remove_all(dir);
    ScenarioConfig cfg = parse_config(kBaseConfig);
    cfg.directory.clear();
    std::ostringstream out;

    setenv("ENGAGEMAX_OUT", (dir / "env").c_str(), 1);
    CHECK(run_subcommand("sweep", cfg, {}, out) == 0);
    CHECK(std::filesystem::exists(dir / "env" / "t_sweep.csv"));

    cfg.directory = (dir / "cfg").string();
    CHECK(run_subcommand("sweep", cfg, {}, out) == 0);
    CHECK(std::filesystem::exists(dir / "cfg" / "t_sweep.csv"));

    CliOverrides ov;
    ov.out_dir = (dir / "flag").string();
    CHECK(run_subcommand("sweep", cfg, ov, out) == 0);
    CHECK(std::filesystem::exists(dir / "flag" / "t_sweep.csv"));
    unsetenv("ENGAGEMAX_OUT");
    std::filesystem::remove_all(dir);
}

TEST_CASE("run_cli maps error categories to exit codes") {
    const auto argv_run = [](std::vector<std::string> args) {
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return run_cli(static_cast<int>(argv.size()), argv.data());
    };
    CHECK(argv_run({"engagemax", "example-1-1"}) == 0);
    // Missing config file -> parse/input error.
    CHECK(argv_run({"engagemax", "solve", "--config", "/nonexistent.json"}) == 2);
    // Unknown subcommand -> CLI parse error.
    CHECK(argv_run({"engagemax", "frobnicate"}) == 2);
}

}  // TEST_SUITE
