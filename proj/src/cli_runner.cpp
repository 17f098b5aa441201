#include "engagemax/cli_runner.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "engagemax/dynamics.hpp"
#include "engagemax/extensions.hpp"
#include "engagemax/principal.hpp"

namespace engagemax {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

void reject_unknown_keys(const ordered_json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key))
            throw input_error("config: unknown key '" + (path.empty() ? key : path + "." + key) +
                              "'");
    }
}

template <typename T>
T require(const ordered_json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw input_error("config: missing key '" + path + "." + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw input_error("config: bad value for '" + path + "." + key + "'");
    }
}

template <typename T>
void maybe(const ordered_json& obj, const std::string& path, const std::string& key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw input_error("config: bad value for '" + path + "." + key + "'");
    }
}

}  // namespace

DecisionProblem ScenarioConfig::build_problem() const {
    if (entropy != "shannon-negentropy")
        throw input_error("config: problem.entropy '" + entropy +
                          "' is not supported in scenario files");
    try {
        return DecisionProblem(states, actions, utility, Belief(prior), kappa, chi, rho,
                               EntropyModel::shannon());
    } catch (const input_error& e) {
        throw input_error("config: problem block invalid: " + std::string(e.what()));
    }
}

ScenarioConfig parse_config(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("config: JSON parse failure: ") + e.what());
    }
    if (!root.is_object()) throw input_error("config: top level must be an object");
    reject_unknown_keys(root, "", {"schema", "problem", "command", "output"});

    ScenarioConfig cfg;
    cfg.schema = require<int>(root, "", "schema");
    if (cfg.schema != 1)
        throw input_error("config: schema version " + std::to_string(cfg.schema) + " unsupported");

    if (!root.contains("problem")) throw input_error("config: missing key 'problem'");
    const auto& pb = root.at("problem");
    reject_unknown_keys(pb, "problem",
                        {"states", "actions", "utility", "prior", "kappa", "chi", "rho", "entropy"});
    cfg.states = require<std::vector<std::string>>(pb, "problem", "states");
    cfg.actions = require<std::vector<std::string>>(pb, "problem", "actions");
    cfg.utility = require<std::vector<std::vector<double>>>(pb, "problem", "utility");
    cfg.prior = require<std::vector<double>>(pb, "problem", "prior");
    cfg.kappa = require<double>(pb, "problem", "kappa");
    cfg.chi = require<double>(pb, "problem", "chi");
    cfg.rho = require<double>(pb, "problem", "rho");
    maybe(pb, "problem", "entropy", cfg.entropy);
    {
        double sum = 0.0;
        for (double p : cfg.prior) sum += p;
        if (std::abs(sum - 1.0) > 1e-12)
            throw input_error("config: problem.prior sums to " + fmt(sum) + ", expected 1");
    }

    if (root.contains("command")) {
        const auto& cb = root.at("command");
        reject_unknown_keys(cb, "command",
                            {"operation", "grid_points", "grid_lo", "grid_hi", "seed", "samples",
                             "deadline", "garbles", "jump_bound", "schedule", "ode_step", "alpha"});
        if (cb.contains("operation")) cfg.operation = cb.at("operation").get<std::string>();
        maybe(cb, "command", "grid_points", cfg.grid_points);
        maybe(cb, "command", "grid_lo", cfg.grid_lo);
        maybe(cb, "command", "grid_hi", cfg.grid_hi);
        maybe(cb, "command", "seed", cfg.seed);
        maybe(cb, "command", "samples", cfg.samples);
        maybe(cb, "command", "deadline", cfg.deadline);
        maybe(cb, "command", "garbles", cfg.garbles);
        maybe(cb, "command", "jump_bound", cfg.jump_bound);
        maybe(cb, "command", "ode_step", cfg.ode_step);
        maybe(cb, "command", "alpha", cfg.alpha);
        if (cb.contains("schedule")) {
            const auto rows = require<std::vector<std::vector<double>>>(cb, "command", "schedule");
            for (const auto& r : rows) {
                if (r.size() != 2)
                    throw input_error("config: command.schedule rows must be [time, kappa]");
                cfg.schedule.emplace_back(r[0], r[1]);
            }
        }
    }

    if (root.contains("output")) {
        const auto& ob = root.at("output");
        reject_unknown_keys(ob, "output", {"directory", "prefix"});
        maybe(ob, "output", "directory", cfg.directory);
        maybe(ob, "output", "prefix", cfg.prefix);
    }
    return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    ordered_json root;
    root["schema"] = cfg.schema;
    ordered_json pb;
    pb["states"] = cfg.states;
    pb["actions"] = cfg.actions;
    pb["utility"] = cfg.utility;
    pb["prior"] = cfg.prior;
    pb["kappa"] = cfg.kappa;
    pb["chi"] = cfg.chi;
    pb["rho"] = cfg.rho;
    pb["entropy"] = cfg.entropy;
    root["problem"] = pb;
    ordered_json cb;
    if (cfg.operation) cb["operation"] = *cfg.operation;
    cb["grid_points"] = cfg.grid_points;
    cb["grid_lo"] = cfg.grid_lo;
    cb["grid_hi"] = cfg.grid_hi;
    cb["seed"] = cfg.seed;
    cb["samples"] = cfg.samples;
    cb["deadline"] = cfg.deadline;
    cb["garbles"] = cfg.garbles;
    cb["jump_bound"] = cfg.jump_bound;
    if (!cfg.schedule.empty()) {
        ordered_json rows = ordered_json::array();
        for (const auto& [t, k] : cfg.schedule) rows.push_back({t, k});
        cb["schedule"] = rows;
    }
    cb["ode_step"] = cfg.ode_step;
    cb["alpha"] = cfg.alpha;
    root["command"] = cb;
    ordered_json ob;
    ob["directory"] = cfg.directory;
    ob["prefix"] = cfg.prefix;
    root["output"] = ob;
    return root.dump(2);
}

ScenarioConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("config: cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::filesystem::path resolve_out_dir(const std::optional<ScenarioConfig>& cfg,
                                      const CliOverrides& ov) {
    if (ov.out_dir && !ov.out_dir->empty()) return *ov.out_dir;
    if (cfg && !cfg->directory.empty()) return cfg->directory;
    if (const char* env = std::getenv("ENGAGEMAX_OUT"); env && *env) return env;
    return ".";
}

std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw input_error("output: cannot write '" + path.string() + "'");
    return out;
}

void print_posterior(std::ostream& out, const std::string& label, const DecisionProblem& problem,
                     const PosteriorDistribution& pi) {
    for (std::size_t i = 0; i < pi.atoms.size(); ++i) {
        out << label << " atom " << i << ": weight=" << fmt(pi.atoms[i].weight) << " q=(";
        for (std::size_t x = 0; x < problem.n_states(); ++x) {
            if (x) out << ", ";
            out << fmt(pi.atoms[i].belief[x]);
        }
        out << ")\n";
    }
}

void write_posterior_csv(std::ostream& os, const DecisionProblem& problem,
                         const PosteriorDistribution& pi) {
    os << "atom";
    for (const auto& s : problem.states) os << ",q_" << s;
    os << ",weight\n";
    for (std::size_t i = 0; i < pi.atoms.size(); ++i) {
        os << i;
        for (std::size_t x = 0; x < problem.n_states(); ++x)
            os << "," << fmt(pi.atoms[i].belief[x]);
        os << "," << fmt(pi.atoms[i].weight) << "\n";
    }
}

const ScenarioConfig& need_config(const std::optional<ScenarioConfig>& cfg,
                                  const std::string& sub) {
    if (!cfg) throw input_error(sub + ": requires --config");
    return *cfg;
}

int cmd_example_1_1(std::ostream& out) {
    const DecisionProblem problem = binary_match_problem(0.5, 2.0, 1.0, 1.0);
    const EntropyModel shannon = EntropyModel::shannon();
    const double e = std::exp(1.0);
    const Belief half = Belief::uniform(2);

    const Belief post_a({1.0 / (1.0 + e), e / (1.0 + e)});
    const double alpha_inv = entropy_gap(shannon, post_a, half);
    const double vb = u_hat(problem, post_a).value - problem.kappa * alpha_inv;

    const Belief post_b({1.0 / (1.0 + 4.0 * e), 4.0 * e / (1.0 + 4.0 * e)});
    const double alpha_tilde_inv = entropy_gap(shannon, post_b, half);
    const double vb_tilde = u_hat(problem, post_b).value - problem.kappa * alpha_tilde_inv;

    const BenchmarkSolution bench = agent_benchmark(problem);

    out << "V_B = " << fmt(vb) << "\n";
    out << "V_B_tilde = " << fmt(vb_tilde) << "\n";
    out << "alpha_inv = " << fmt(alpha_inv) << "\n";
    out << "alpha_tilde_inv = " << fmt(alpha_tilde_inv) << "\n";
    out << "benchmark_value = " << fmt(bench.value) << "\n";
    return 0;
}

int cmd_solve(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const PrincipalSolution sol = solve_principal(problem);
    out << "degenerate = " << (sol.degenerate ? "true" : "false") << "\n";
    out << "engagement_J = " << fmt(sol.engagement) << "\n";
    out << "lambda = " << fmt(sol.lambda) << "\n";
    out << "cost_coeff = " << fmt(sol.cost_coeff) << "\n";
    out << "alpha_star = " << fmt(sol.alpha_star) << "\n";
    out << "agent_value = " << fmt(sol.agent_value) << "\n";
    out << "binding_residual = " << fmt(sol.binding_residual) << "\n";
    print_posterior(out, "pi_star", problem, sol.pi_star);
    auto csv = open_csv(resolve_out_dir(cfg, ov), cfg.prefix + "_solution.csv");
    write_posterior_csv(csv, problem, sol.pi_star);
    return 0;
}

int cmd_benchmark(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const BenchmarkSolution sol = agent_benchmark(problem);
    out << "benchmark_value = " << fmt(sol.value) << "\n";
    out << "continuation = " << (sol.continuation ? "true" : "false") << "\n";
    if (sol.boundaries)
        out << "boundaries = (" << fmt(sol.boundaries->first) << ", "
            << fmt(sol.boundaries->second) << ")\n";
    print_posterior(out, "pi_agent", problem, sol.posterior);
    auto csv = open_csv(resolve_out_dir(cfg, ov), cfg.prefix + "_benchmark.csv");
    write_posterior_csv(csv, problem, sol.posterior);
    return 0;
}

int cmd_sweep(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    if (cfg.grid_points < 2) throw input_error("sweep: grid_points must be at least 2");
    if (!(cfg.grid_lo > 0.0 && cfg.grid_hi < 1.0 && cfg.grid_lo < cfg.grid_hi))
        throw input_error("sweep: grid must satisfy 0 < grid_lo < grid_hi < 1");
    std::vector<double> priors(cfg.grid_points);
    for (int i = 0; i < cfg.grid_points; ++i)
        priors[i] = cfg.grid_lo + (cfg.grid_hi - cfg.grid_lo) * i / (cfg.grid_points - 1.0);
    const auto rows = sweep_prior(problem, priors);
    auto csv = open_csv(resolve_out_dir(cfg, ov), cfg.prefix + "_sweep.csv");
    csv << "prior,agent_lo,agent_hi,principal_lo,principal_hi,agent_engagement,"
           "principal_engagement,v_benchmark,engagement_j\n";
    for (const auto& r : rows) {
        csv << fmt(r.prior) << "," << fmt(r.agent_lo) << "," << fmt(r.agent_hi) << ","
            << fmt(r.principal_lo) << "," << fmt(r.principal_hi) << ","
            << fmt(r.agent_engagement) << "," << fmt(r.principal_engagement) << ","
            << fmt(r.benchmark_value) << "," << fmt(r.engagement_value) << "\n";
    }
    out << "rows = " << rows.size() << "\n";
    return 0;
}

int cmd_simulate(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const PrincipalSolution sol = solve_principal(problem);
    if (sol.degenerate) {
        out << "degenerate solution; nothing to simulate\n";
        return 0;
    }
    const std::uint64_t seed = ov.seed.value_or(cfg.seed);
    const std::uint64_t n = ov.samples.value_or(cfg.samples);
    const PathEnsemble ens = sample_dilution(sol.pi_star, sol.alpha_star, n, seed, problem.chi);
    KahanSum tau;
    for (const auto& p : ens.paths) tau.add(p.jump_time);
    out << "paths = " << n << "\n";
    out << "alpha_star = " << fmt(sol.alpha_star) << "\n";
    out << "mean_tau = " << fmt(tau.value() / static_cast<double>(n)) << "\n";
    out << "expected_tau = " << fmt(1.0 / sol.alpha_star) << "\n";
    auto csv = open_csv(resolve_out_dir(cfg, ov), cfg.prefix + "_paths.csv");
    write_paths_csv(ens, csv, problem.states);
    return 0;
}

int cmd_audit(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const PrincipalSolution sol = solve_principal(problem);
    if (sol.degenerate) {
        out << "degenerate solution; audits are vacuous\n";
        return 0;
    }
    const std::uint64_t seed = ov.seed.value_or(cfg.seed);
    const std::uint64_t n = ov.samples.value_or(cfg.samples);
    const PathEnsemble ens = sample_dilution(sol.pi_star, sol.alpha_star, n, seed, problem.chi);

    const FeasibilityReport fr = audit_feasibility(ens, problem);
    out << "feasibility = " << (fr.pass ? "pass" : "FAIL") << "\n";
    out << "  participation: " << fmt(fr.participation_lhs) << " >= "
        << fmt(fr.participation_rhs) << " (se " << fmt(fr.participation_se) << ")\n";
    out << "  capacity: " << fmt(fr.capacity_lhs) << " <= " << fmt(fr.capacity_rhs) << " (se "
        << fmt(fr.capacity_se) << ")\n";
    out << "  martingale max dev: " << fmt(fr.martingale_max_dev) << " (tol "
        << fmt(fr.martingale_tol) << ")\n";

    const std::vector<StoppingRule> rules{StoppingRule::immediate(),
                                          StoppingRule::fixed_deadline(cfg.deadline)};
    const StoppingReport sr = audit_stopping(sol.pi_star, sol.alpha_star, problem, rules, n, seed);
    out << "stopping = " << (sr.pass ? "pass" : "FAIL") << "\n";
    out << "  recommended: " << fmt(sr.recommended_utility) << " (se "
        << fmt(sr.recommended_se) << ")\n";
    for (const auto& row : sr.deviations)
        out << "  " << row.name << ": " << fmt(row.utility) << " (se " << fmt(row.se) << ")\n";

    const GarblingReport gr = audit_garbling(sol.pi_star, sol.alpha_star, problem, cfg.garbles,
                                             seed + 1);
    out << "garbling = " << (gr.pass ? "pass" : "FAIL") << " (worst " << fmt(gr.worst_value)
        << " vs bound " << fmt(gr.bound) << ", " << gr.n_checked << " contractions)\n";

    if (!fr.pass || !sr.pass || !gr.pass) throw audit_error("audit: a property check failed");
    return 0;
}

int cmd_increasing(const ScenarioConfig& cfg, const CliOverrides& ov, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    if (cfg.schedule.empty())
        throw input_error("increasing: command.schedule must list [time, kappa] breakpoints");
    const CostSchedule schedule(cfg.schedule);
    IncreasingCostOptions opt;
    opt.ode_step = cfg.ode_step;
    opt.alpha_nominal = cfg.alpha;
    const IncreasingCostSolution sol = solve_increasing_cost(problem, schedule, opt);
    const double foc = increasing_cost_foc_residual(sol, problem, schedule);
    out << "t0 = " << fmt(sol.t0) << "\n";
    out << "gamma_terminal = " << fmt(sol.gamma_terminal_multiplier) << "\n";
    out << "foc_residual = " << fmt(foc) << "\n";
    auto csv = open_csv(resolve_out_dir(cfg, ov), cfg.prefix + "_increasing.csv");
    csv << "t,kappa,support_lo,support_hi,cost_coeff,Gamma,gamma,s_of_t\n";
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        csv << fmt(sol.grid[i]) << "," << fmt(schedule(sol.grid[i])) << ","
            << fmt(sol.support_lo[i]) << "," << fmt(sol.support_hi[i]) << ","
            << fmt(sol.cost_coeff[i]) << "," << fmt(sol.big_gamma[i]) << ","
            << fmt(sol.small_gamma[i]) << "," << fmt(sol.time_change[i]) << "\n";
    }
    return 0;
}

int cmd_bounded(const ScenarioConfig& cfg, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const BoundedJumpSolution sol = bounded_jump_solve(problem, cfg.jump_bound);
    out << "engagement_J_d = " << fmt(sol.engagement) << "\n";
    out << "support = [" << fmt(sol.support_lo) << ", " << fmt(sol.support_hi) << "]\n";
    out << "restricted = " << (sol.restricted ? "true" : "false") << "\n";
    out << "bound = " << sol.bound_description << "\n";
    return 0;
}

int cmd_unlimited(const ScenarioConfig& cfg, std::ostream& out) {
    const DecisionProblem problem = cfg.build_problem();
    const UnlimitedCapacitySolution sol = unlimited_capacity_solve(problem);
    out << "degenerate = " << (sol.degenerate ? "true" : "false") << "\n";
    out << "alpha = " << fmt(sol.alpha) << "\n";
    out << "expected_tau = " << fmt(sol.expected_tau) << "\n";
    return 0;
}

int cmd_teacher(const std::optional<ScenarioConfig>& cfg, const CliOverrides& ov,
                std::ostream& out) {
    const TeacherEngagementReport eng = teacher_engagement_max();
    out << "engagement_reduction = " << (eng.pass ? "pass" : "FAIL") << "\n";
    out << "  objective_gap = " << fmt(eng.objective_gap) << "\n";
    out << "  lambda_gap = " << fmt(eng.lambda_gap) << "\n";
    out << "  irrelevant_marginal_dev = " << fmt(eng.irrelevant_marginal_dev) << "\n";

    const TeacherKnowledgeReport know = teacher_knowledge_max();
    out << "knowledge_lambda = " << fmt(know.lambda) << "\n";
    out << "knowledge_ic_residual = " << fmt(know.ic_residual) << "\n";
    out << "knowledge_marginal_dev = " << fmt(know.marginal_dev) << "\n";

    const auto dir = resolve_out_dir(cfg, ov);
    const std::string prefix = cfg ? cfg->prefix : "run";
    auto csv = open_csv(dir, prefix + "_teacher_table.csv");
    csv << "action,P_L0,P_R0,P_L1,P_R1\n";
    const char* names[4] = {"l_guess0", "r_guess0", "l_guess1", "r_guess1"};
    for (int a = 0; a < 4; ++a) {
        csv << names[a];
        for (int x = 0; x < 4; ++x) csv << "," << fmt(know.table[a][x]);
        csv << "\n";
    }
    if (!eng.pass) throw audit_error("teacher: engagement reduction checks failed");
    return 0;
}

}  // namespace

int run_subcommand(const std::string& name, const std::optional<ScenarioConfig>& config,
                   const CliOverrides& overrides, std::ostream& out) {
    if (config && config->operation && *config->operation != name)
        throw input_error("config: command.operation '" + *config->operation +
                          "' does not match subcommand '" + name + "'");
    if (name == "example-1-1") return cmd_example_1_1(out);
    if (name == "solve") return cmd_solve(need_config(config, name), overrides, out);
    if (name == "benchmark") return cmd_benchmark(need_config(config, name), overrides, out);
    if (name == "sweep") return cmd_sweep(need_config(config, name), overrides, out);
    if (name == "simulate") return cmd_simulate(need_config(config, name), overrides, out);
    if (name == "audit") return cmd_audit(need_config(config, name), overrides, out);
    if (name == "increasing") return cmd_increasing(need_config(config, name), overrides, out);
    if (name == "bounded") return cmd_bounded(need_config(config, name), out);
    if (name == "unlimited") return cmd_unlimited(need_config(config, name), out);
    if (name == "teacher") return cmd_teacher(config, overrides, out);
    throw input_error("unknown subcommand '" + name + "'");
}

int run_cli(int argc, char** argv) {
    CLI::App app{"engagement-maximization solver and simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    CliOverrides ov;
    std::uint64_t seed_flag = 0;
    std::uint64_t samples_flag = 0;
    std::string out_flag;
    app.add_option("--config", config_path, "scenario JSON file");
    auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed override");
    auto* samples_opt = app.add_option("--samples", samples_flag, "sample count override");
    auto* out_opt = app.add_option("--out", out_flag, "output directory override");

    const char* subs[] = {"example-1-1", "solve", "benchmark", "sweep",     "simulate",
                          "audit",       "increasing", "bounded", "unlimited", "teacher"};
    for (const char* s : subs) app.add_subcommand(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return input_error::exit_code;
    }

    try {
        if (seed_opt->count()) ov.seed = seed_flag;
        if (samples_opt->count()) ov.samples = samples_flag;
        if (out_opt->count()) ov.out_dir = out_flag;
        std::optional<ScenarioConfig> cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        const std::string sub = app.get_subcommands().front()->get_name();
        return run_subcommand(sub, cfg, ov, std::cout);
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return input_error::exit_code;
    } catch (const capability_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return capability_error::exit_code;
    } catch (const numerical_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical_error::exit_code;
    } catch (const audit_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return audit_error::exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical_error::exit_code;
    }
}

}  // namespace engagemax
