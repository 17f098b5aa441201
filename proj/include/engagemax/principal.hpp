#pragma once

#include <vector>

#include "engagemax/static_ri.hpp"

namespace engagemax {

// Solution of the engagement-maximization problem: the stopping-belief
// distribution, the multiplier behind it, and the induced dilution rate.
struct PrincipalSolution {
    PosteriorDistribution pi_star;
    double lambda = 0.0;      // multiplier on the participation constraint
    double cost_coeff = 0.0;  // kappa/chi - rho/lambda, the effective info cost
    double alpha_star = 0.0;  // dilution jump rate chi / E[H - H(prior)]
    double engagement = 0.0;  // rho * E[H - H(prior)]
    double agent_value = 0.0; // E[u_hat] - kappa * E[tau]
    double binding_residual = 0.0;
    bool binding = true;      // |residual| <= 1e-8
    bool degenerate = false;
};

struct PrincipalOptions {
    double bracket_eps = 1e-8;
    double residual_tol = 1e-10;
    int max_bisection_steps = 200;
    bool monotonicity_scan = true;
    int scan_points = 9;
};

// True when learning the state outright is too costly for the agent:
// u_hat(prior) - (kappa/chi) H(prior) > sum_x prior_x (u_hat(e_x) - (kappa/chi) H(e_x)).
bool check_assumption(const DecisionProblem& problem);

// Bisection on the effective cost coefficient until the agent's participation
// constraint binds; recovers lambda afterward.
PrincipalSolution solve_principal(const DecisionProblem& problem,
                                  const PrincipalOptions& options = {});

struct ExtremeBeliefsReport {
    bool pass = false;
    bool vacuous = false;  // degenerate solution, nothing to compare
    double principal_lo = 0.0, principal_hi = 0.0;
    double agent_lo = 0.0, agent_hi = 0.0;
    double margin_lo = 0.0, margin_hi = 0.0;
};

// Every stopping belief of the principal lies strictly outside the convex
// hull of the agent-optimal stopping beliefs.
ExtremeBeliefsReport verify_extreme_beliefs(const DecisionProblem& problem);

struct SweepRow {
    double prior = 0.0;
    double agent_lo = 0.0, agent_hi = 0.0;
    double principal_lo = 0.0, principal_hi = 0.0;
    double agent_engagement = 0.0;
    double principal_engagement = 0.0;
    double benchmark_value = 0.0;
    double engagement_value = 0.0;  // duplicate of principal_engagement, CSV column J
    bool degenerate = false;
};

// One row per prior: supports, engagements, and values for both the
// agent-optimal benchmark and the principal's solution. Binary problems only.
std::vector<SweepRow> sweep_prior(const DecisionProblem& problem_template,
                                  const std::vector<double>& priors);

}  // namespace engagemax
