#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "engagemax/beliefs.hpp"

namespace engagemax {

// Finite-support distribution over posterior beliefs.
struct PosteriorDistribution {
    struct Atom {
        Belief belief;
        double weight;
    };
    std::vector<Atom> atoms;

    Belief barycenter() const;
    bool degenerate_at(const Belief& prior, double tol = 1e-7) const;
    // Throws input_error when weights or the barycenter are off.
    void validate(const Belief& prior) const;

    static PosteriorDistribution degenerate(const Belief& prior);
};

double expected_u_hat(const DecisionProblem& problem, const PosteriorDistribution& pi);
double expected_entropy_gap(const DecisionProblem& problem, const PosteriorDistribution& pi,
                            const Belief& q0);

struct StaticRIOptions {
    double fixed_point_tol = 1e-12;
    int max_iterations = 100000;
    double prune_tol = 1e-10;
    double degenerate_tol = 1e-7;
};

struct StaticRIResult {
    PosteriorDistribution posterior;
    double value = 0.0;  // E[u_hat] - c * E[H - H(prior)]
    int iterations = 0;
    // Set when a pruned action still passes the first-order optimality test,
    // i.e. the solution may have richer support than returned.
    bool richer_support_flag = false;
};

// Static rational-inattention problem with information cost c * (H - H(prior)).
// Shannon negentropy: logit fixed point on unconditional action probabilities
// (any number of states/actions). Custom entropy: binary-state concavification.
PosteriorDistribution solve_static_ri(const DecisionProblem& problem, double cost_scale,
                                      const StaticRIOptions& options = {});
StaticRIResult solve_static_ri_detailed(const DecisionProblem& problem, double cost_scale,
                                        const StaticRIOptions& options = {});

struct BenchmarkSolution {
    double value = 0.0;  // V^B at the prior
    PosteriorDistribution posterior;
    bool continuation = false;
    // Continuation-region boundaries for binary problems (by bisection).
    std::optional<std::pair<double, double>> boundaries;
};

// The agent-optimal benchmark: the same static problem at cost kappa/chi.
BenchmarkSolution agent_benchmark(const DecisionProblem& problem);

// Best net value attainable with posteriors restricted to Supp(pi) and mean q,
// measured relative to acting immediately at q. Linear program over weights.
// Throws input_error when q lies outside the convex hull of the support.
double restricted_value(const DecisionProblem& problem, const Belief& q,
                        const PosteriorDistribution& pi);

enum class BeliefClass { Decisive, Suspensive, Stop };

BeliefClass classify_belief(const DecisionProblem& problem, const Belief& q,
                            const PosteriorDistribution& pi);

const char* to_string(BeliefClass c);

}  // namespace engagemax
