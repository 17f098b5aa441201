#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "engagemax/beliefs.hpp"

namespace engagemax {

// Parsed scenario file: problem, command parameters, output destination.
// Unknown keys anywhere are rejected with the offending path in the message.
struct ScenarioConfig {
    int schema = 1;

    // problem block
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::vector<double>> utility;
    std::vector<double> prior;
    double kappa = 0.0;
    double chi = 0.0;
    double rho = 0.0;
    std::string entropy = "shannon-negentropy";

    // command block
    std::optional<std::string> operation;
    int grid_points = 101;
    double grid_lo = 0.01;
    double grid_hi = 0.99;
    std::uint64_t seed = 0;
    std::uint64_t samples = 100000;
    double deadline = 0.5;
    int garbles = 64;
    double jump_bound = 0.0;
    std::vector<std::pair<double, double>> schedule;
    double ode_step = 0.0;
    double alpha = 1.0;

    // output block
    std::string directory;  // empty = resolve from env / cwd
    std::string prefix = "run";

    DecisionProblem build_problem() const;
};

ScenarioConfig parse_config(const std::string& text);
std::string serialize_config(const ScenarioConfig& config);
ScenarioConfig load_config_file(const std::string& path);

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> samples;
    std::optional<std::string> out_dir;
};

// Dispatches one subcommand; writes CSV artifacts and prints one summary line
// per solved quantity. Returns the process exit code.
int run_subcommand(const std::string& name, const std::optional<ScenarioConfig>& config,
                   const CliOverrides& overrides, std::ostream& out);

int run_cli(int argc, char** argv);

}  // namespace engagemax
