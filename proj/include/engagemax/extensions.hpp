#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "engagemax/dynamics.hpp"
#include "engagemax/principal.hpp"

namespace engagemax {

// Nondecreasing piecewise-linear delay cost, constant after the last
// breakpoint time T.
class CostSchedule {
public:
    // breakpoints: (time, kappa) pairs with strictly increasing times,
    // first time 0; kappa values nondecreasing.
    explicit CostSchedule(std::vector<std::pair<double, double>> breakpoints);

    static CostSchedule constant(double kappa, double horizon);

    double operator()(double t) const;
    // Left-segment slope at t (0 for t >= T).
    double slope(double t) const;
    // Integral of kappa over [s, t].
    double integral(double s, double t) const;
    double horizon() const { return breakpoints_.back().first; }
    double terminal_kappa() const { return breakpoints_.back().second; }

private:
    std::vector<std::pair<double, double>> breakpoints_;
};

// Time-indexed solution of the increasing-cost problem: the frozen-cost
// stopping supports, the backward multiplier curve Gamma with derivative
// gamma, and the time change s(t) of the composed jump policy.
struct IncreasingCostSolution {
    double t0 = 0.0;
    double horizon = 0.0;
    double gamma_terminal_multiplier = 0.0;  // Gamma_T, the frozen multiplier at T
    double alpha_nominal = 1.0;

    std::vector<double> grid;            // times from 0 to T
    std::vector<double> support_lo;      // lower stopping belief at kappa(t)
    std::vector<double> support_hi;      // upper stopping belief at kappa(t)
    std::vector<double> cost_coeff;      // effective static cost at kappa(t)
    std::vector<double> frozen_lambda;   // Lambda-bar_t in the multiplier system
    std::vector<double> entropy_gap;     // E[H - H(prior)] under the frozen solution
    std::vector<double> payoff_gap;      // E[u_hat - u_hat(prior)]
    std::vector<double> gamma_upper;     // Gamma-bar_t, the frozen-cost multiplier
    std::vector<double> gamma_upper_dot; // d/dt Gamma-bar_t
    std::vector<double> big_gamma;       // Gamma(t), integrated backward from T
    std::vector<double> small_gamma;     // gamma(t) = Gamma'(t)
    std::vector<double> time_change;     // s(t), identity before t0

    double gamma_at(double t) const;
    double big_gamma_at(double t) const;
};

struct IncreasingCostOptions {
    double ode_step = 0.0;  // 0 = 1e-4 * horizon
    double refine_tol = 1e-8;
    double alpha_nominal = 1.0;
};

// Freezes the cost at each grid time and solves the constant-cost problem
// there, then integrates the multiplier ODE backward from T with RK4 and
// composes the time-changed jump policy.
IncreasingCostSolution solve_increasing_cost(const DecisionProblem& problem,
                                             const CostSchedule& schedule,
                                             const IncreasingCostOptions& options = {});

// Largest absolute deviation of the stationarity expression from constancy
// across support atoms and probe times; small residuals certify optimality of
// the integrated multiplier curve.
double increasing_cost_foc_residual(const IncreasingCostSolution& sol,
                                    const DecisionProblem& problem, const CostSchedule& schedule,
                                    int n_probes = 33);

struct BoundedJumpSolution {
    double engagement = 0.0;
    double support_lo = 0.0, support_hi = 0.0;
    bool restricted = false;  // true when the bound binds (d below the diameter case)
    bool degenerate = false;
    std::string bound_description;
};

// Engagement when belief jumps may not exceed Euclidean size d. d = 0
// recovers the agent-optimal stopping beliefs; d at least the simplex
// diameter recovers the unrestricted solution. Binary states only.
BoundedJumpSolution bounded_jump_solve(const DecisionProblem& problem, double d);

struct UnlimitedCapacitySolution {
    PosteriorDistribution pi_max;  // full-information posteriors weighted by the prior
    double alpha = 0.0;
    double expected_tau = 0.0;
    bool degenerate = false;
};

// No processing constraint; the platform maximizes expected decision time.
UnlimitedCapacitySolution unlimited_capacity_solve(const DecisionProblem& problem);

// One sampled trajectory that mixes jumps between the two equally suspensive
// beliefs q0 and 1-q0 with an eventual decisive jump into Supp(pi_star).
struct ComposedPath {
    std::vector<double> jump_times;   // times of intermediate (suspensive) jumps
    std::vector<Belief> beliefs;      // belief after each intermediate jump
    Belief start_belief;
    Belief terminal_belief;
    double stop_time = 0.0;
    double info_total = 0.0;  // chi * stop_time: capacity binds throughout
};

ComposedPath compose_suspensive_path(const DecisionProblem& problem,
                                     const PosteriorDistribution& pi_star, std::uint64_t seed);

// Teacher-student reinterpretation: four states (relevant x irrelevant), the
// teacher maximizes engagement. The optimum acquires nothing about the
// irrelevant dimension and reduces to the binary problem.
struct TeacherEngagementReport {
    PrincipalSolution binary;
    PrincipalSolution four_state;
    double objective_gap = 0.0;          // |J_4 - J_2|
    double lambda_gap = 0.0;             // |lambda_4 - lambda_2|
    double irrelevant_marginal_dev = 0.0;  // max |t2-marginal - 1/2| over atoms
    double relevant_support_dev = 0.0;     // max |t1-marginal - binary atom|
    double compression_gain_min = 0.0;   // min over sampled tables of averaged - raw objective
    bool pass = false;
};

TeacherEngagementReport teacher_engagement_max(int n_compression_samples = 64,
                                               std::uint64_t seed = 20240901);

// Teacher cares only about the irrelevant dimension; the optimum is a logit
// table over four composite actions with the multiplier pinned by the
// student's binding participation constraint.
struct TeacherKnowledgeReport {
    double lambda = 0.0;
    std::array<std::array<double, 4>, 4> table{};     // P(action | state)
    std::array<std::array<double, 2>, 2> marginal{};  // answer x relevant-state
    std::array<double, 4> default_rule{};             // unconditional action probs
    double ic_residual = 0.0;
    double marginal_dev = 0.0;  // max |marginal - e/(1+e) pattern|
};

TeacherKnowledgeReport teacher_knowledge_max();

// The four-state engagement-max problem (relevant x irrelevant states,
// answer-only actions) used by the teacher analysis and its tests.
DecisionProblem teacher_four_state_problem(double kappa = 2.0, double chi = 1.0, double rho = 1.0);

}  // namespace engagemax
