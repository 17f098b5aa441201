#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "engagemax/errors.hpp"

namespace engagemax {

// Point on the probability simplex. Immutable after construction.
class Belief {
public:
    explicit Belief(std::vector<double> probs);

    static Belief uniform(std::size_t n);
    static Belief vertex(std::size_t n, std::size_t state);

    const std::vector<double>& probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::size_t size() const { return probs_.size(); }

    // Largest coordinate-wise distance to another belief.
    double max_distance(const Belief& other) const;
    // Euclidean distance, the norm used for jump-size bounds.
    double euclidean_distance(const Belief& other) const;

    bool interior(double tol = 1e-12) const;

private:
    std::vector<double> probs_;
};

// Generalized entropy: a convex function on the simplex together with its
// gradient. The canonical instance is convex negentropy sum_x q_x ln q_x
// (nats), so information gaps are H(posterior) - H(prior).
struct EntropyModel {
    enum class Kind { shannon_negentropy, custom };

    Kind kind = Kind::shannon_negentropy;
    std::function<double(const Belief&)> value;
    std::function<std::vector<double>(const Belief&)> gradient;

    static EntropyModel shannon();
    static EntropyModel custom_model(std::function<double(const Belief&)> value,
                                     std::function<std::vector<double>(const Belief&)> gradient);

    bool is_shannon() const { return kind == Kind::shannon_negentropy; }
};

double entropy_gap(const EntropyModel& model, const Belief& q, const Belief& q0);

// Sampled validation of an entropy model: convexity along random chords and
// gradient agreement with central finite differences at interior beliefs.
struct EntropyModelCheck {
    bool convex = false;
    bool gradient_ok = false;
    double worst_convexity_violation = 0.0;
    double worst_gradient_rel_error = 0.0;
};
EntropyModelCheck check_entropy_model(const EntropyModel& model, std::size_t dim,
                                      int samples = 200, std::uint64_t seed = 12345);

// Finite decision problem plus the agent's information-processing primitives.
struct DecisionProblem {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::vector<double>> utility;  // utility[a][x]
    Belief prior;
    double kappa;  // flow delay cost, utils per unit time
    double chi;    // processing capacity, nats per unit time
    double rho;    // revenue per nat of attention
    EntropyModel entropy;

    DecisionProblem(std::vector<std::string> states_, std::vector<std::string> actions_,
                    std::vector<std::vector<double>> utility_, Belief prior_, double kappa_,
                    double chi_, double rho_, EntropyModel entropy_ = EntropyModel::shannon());

    std::size_t n_states() const { return states.size(); }
    std::size_t n_actions() const { return actions.size(); }
    // kappa/chi, the information cost coefficient faced by the agent alone.
    double cost_ratio() const { return kappa / chi; }

    double entropy_at(const Belief& q) const { return entropy.value(q); }
};

// The symmetric binary match/mismatch problem (+1 on a match, -1 otherwise)
// used throughout the examples and tests.
DecisionProblem binary_match_problem(double prior_upper, double kappa, double chi, double rho);

struct PayoffResult {
    double value = 0.0;
    std::vector<int> best_actions;  // all maximizers, ascending
    int best = -1;                  // lowest-index maximizer
};

// Expected utility of acting optimally at belief q (no delay cost).
PayoffResult u_hat(const DecisionProblem& problem, const Belief& q);

// Stochastic matrix R with R^J = I; maps the simplex onto itself.
struct Rotation {
    std::vector<std::vector<double>> matrix;  // column-stochastic, matrix[i][j] = R_ij
    int order;

    Rotation(std::vector<std::vector<double>> matrix_, int order_);

    static Rotation swap_binary();
    Belief apply(const Belief& q) const;
};

struct SymmetryReport {
    bool symmetric = false;
    double max_entropy_dev = 0.0;
    double max_payoff_dev = 0.0;
};

SymmetryReport check_rotational_symmetry(const EntropyModel& model, const DecisionProblem& problem,
                                         const Rotation& rotation, int samples = 256,
                                         std::uint64_t seed = 7);

}  // namespace engagemax
