#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "engagemax/principal.hpp"
#include "engagemax/rng.hpp"
#include "engagemax/static_ri.hpp"

namespace engagemax {

// One sampled run of the dilution process: beliefs sit at the prior until an
// exponential jump time, then land on a draw from the stopping distribution.
struct DilutionPath {
    double jump_time = 0.0;
    Belief terminal_belief;
    Belief pre_jump_belief;
    double info_total = 0.0;  // chi * jump_time under the baseline policy
    std::uint64_t seed = 0;   // per-path derived seed
};

struct PathEnsemble {
    std::vector<DilutionPath> paths;
    double alpha = 0.0;
    double chi = 0.0;
    PosteriorDistribution pi;
    Belief prior;
};

// Inverse-CDF sampling of jump times (Exponential(alpha)) and terminal
// beliefs (categorical over atoms); path k uses seed derive_seed(seed, k),
// so ensembles are bit-reproducible and paths independent.
PathEnsemble sample_dilution(const PosteriorDistribution& pi, double alpha, std::size_t n,
                             std::uint64_t seed, double chi);

// CSV columns: path_id, jump_time, terminal_state_probs..., info_total.
void write_paths_csv(const PathEnsemble& ensemble, std::ostream& os,
                     const std::vector<std::string>& state_names);

// Monte-Carlo audit of the implementability conditions: participation,
// capacity, and the martingale property of beliefs. Tolerances are four
// standard errors of each estimated quantity.
struct FeasibilityReport {
    bool pass = false;
    bool participation_ok = false;
    double participation_lhs = 0.0;  // E[u(q_tau)] - kappa E[tau]
    double participation_rhs = 0.0;  // u_hat(prior)
    double participation_se = 0.0;
    bool capacity_ok = false;
    double capacity_lhs = 0.0;  // E[H - H(prior)] under pi
    double capacity_rhs = 0.0;  // chi * E[tau]
    double capacity_se = 0.0;
    bool martingale_ok = false;
    double martingale_max_dev = 0.0;
    double martingale_tol = 0.0;
    std::string detail;
};

FeasibilityReport audit_feasibility(const PathEnsemble& ensemble, const DecisionProblem& problem);

struct StoppingRule {
    enum class Kind { recommended, immediate, fixed_deadline };
    Kind kind = Kind::recommended;
    double deadline = 0.0;  // used by fixed_deadline: stop at min(tau, deadline)

    static StoppingRule recommended() { return {Kind::recommended, 0.0}; }
    static StoppingRule immediate() { return {Kind::immediate, 0.0}; }
    static StoppingRule fixed_deadline(double t0) { return {Kind::fixed_deadline, t0}; }
};

struct StoppingReport {
    struct Row {
        std::string name;
        double utility = 0.0;
        double se = 0.0;
    };
    bool pass = false;
    double recommended_utility = 0.0;
    double recommended_se = 0.0;
    std::vector<Row> deviations;
};

// No sampled deviation may beat following the recommendation (stop at the
// first jump) beyond Monte-Carlo noise; stopping immediately pays exactly
// u_hat(prior).
StoppingReport audit_stopping(const PosteriorDistribution& pi, double alpha,
                              const DecisionProblem& problem,
                              const std::vector<StoppingRule>& deviations, std::size_t n,
                              std::uint64_t seed);

struct GarblingReport {
    bool pass = false;
    int n_checked = 0;
    double worst_value = 0.0;  // max over contractions of E[u] - kappa E[tau]
    double bound = 0.0;        // u_hat(prior)
    std::string offender;
};

// Random mean-preserving contractions of pi (atom merges and stochastic
// garbles) must leave the agent weakly below the act-now payoff when paying
// the undiluted delay cost.
GarblingReport audit_garbling(const PosteriorDistribution& pi, double alpha,
                              const DecisionProblem& problem, int n_garbles, std::uint64_t seed);

}  // namespace engagemax
