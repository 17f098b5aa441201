#include "engagemax/beliefs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "engagemax/rng.hpp"

namespace engagemax {

namespace {

constexpr double kSumTol = 1e-12;

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace

Belief::Belief(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw input_error("belief: empty probability vector");
    double sum = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw input_error("belief: negative entry " + format_double(p));
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTol)
        throw input_error("belief: entries sum to " + format_double(sum) + ", expected 1");
}

Belief Belief::uniform(std::size_t n) {
    return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Belief Belief::vertex(std::size_t n, std::size_t state) {
    if (state >= n) throw input_error("belief: vertex index out of range");
    std::vector<double> p(n, 0.0);
    p[state] = 1.0;
    return Belief(std::move(p));
}

double Belief::max_distance(const Belief& other) const {
    if (other.size() != size()) throw input_error("belief: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < size(); ++i) d = std::max(d, std::abs(probs_[i] - other[i]));
    return d;
}

double Belief::euclidean_distance(const Belief& other) const {
    if (other.size() != size()) throw input_error("belief: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double d = probs_[i] - other[i];
        s += d * d;
    }
    return std::sqrt(s);
}

bool Belief::interior(double tol) const {
    return std::all_of(probs_.begin(), probs_.end(), [tol](double p) { return p >= tol; });
}

EntropyModel EntropyModel::shannon() {
    EntropyModel m;
    m.kind = Kind::shannon_negentropy;
    m.value = [](const Belief& q) {
        double h = 0.0;
        for (double p : q.probs())
            if (p > 0.0) h += p * std::log(p);
        return h;  // 0 ln 0 := 0
    };
    m.gradient = [](const Belief& q) {
        if (!q.interior())
            throw input_error("entropy gradient undefined at the simplex boundary");
        std::vector<double> g(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) g[i] = 1.0 + std::log(q[i]);
        return g;
    };
    return m;
}

EntropyModel EntropyModel::custom_model(std::function<double(const Belief&)> value,
                                        std::function<std::vector<double>(const Belief&)> gradient) {
    EntropyModel m;
    m.kind = Kind::custom;
    m.value = std::move(value);
    m.gradient = std::move(gradient);
    return m;
}

double entropy_gap(const EntropyModel& model, const Belief& q, const Belief& q0) {
    if (q.size() != q0.size()) throw input_error("entropy_gap: dimension mismatch");
    return model.value(q) - model.value(q0);
}

namespace {

Belief random_interior_belief(Xoshiro256pp& rng, std::size_t dim, double margin) {
    // Dirichlet-ish draw via exponentials, then pull toward uniform to stay interior.
    std::vector<double> p(dim);
    double sum = 0.0;
    for (auto& v : p) {
        v = -std::log(rng.uniform01());
        sum += v;
    }
    for (auto& v : p) v = (1.0 - margin) * (v / sum) + margin / static_cast<double>(dim);
    double s2 = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= s2;
    return Belief(p);
}

}  // namespace

EntropyModelCheck check_entropy_model(const EntropyModel& model, std::size_t dim, int samples,
                                      std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    EntropyModelCheck out;
    double worst_convex = 0.0;
    double worst_grad = 0.0;
    for (int k = 0; k < samples; ++k) {
        const Belief a = random_interior_belief(rng, dim, 1e-3);
        const Belief b = random_interior_belief(rng, dim, 1e-3);
        const double t = rng.uniform01();
        std::vector<double> mixv(dim);
        for (std::size_t i = 0; i < dim; ++i) mixv[i] = t * a[i] + (1.0 - t) * b[i];
        const Belief mix(mixv);
        const double lhs = model.value(mix);
        const double rhs = t * model.value(a) + (1.0 - t) * model.value(b);
        worst_convex = std::max(worst_convex, lhs - rhs);

        // Central differences along simplex-tangent directions e_i - e_last.
        const std::vector<double> grad = model.gradient(a);
        const double h = 1e-6;
        for (std::size_t i = 0; i + 1 < dim; ++i) {
            std::vector<double> up = a.probs(), dn = a.probs();
            up[i] += h;
            up[dim - 1] -= h;
            dn[i] -= h;
            dn[dim - 1] += h;
            double su = 0.0, sd = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                su += up[j];
                sd += dn[j];
            }
            for (std::size_t j = 0; j < dim; ++j) {
                up[j] /= su;
                dn[j] /= sd;
            }
            const double fd = (model.value(Belief(up)) - model.value(Belief(dn))) / (2.0 * h);
            const double an = grad[i] - grad[dim - 1];
            const double scale = std::max(1.0, std::abs(an));
            worst_grad = std::max(worst_grad, std::abs(fd - an) / scale);
        }
    }
    out.worst_convexity_violation = worst_convex;
    out.worst_gradient_rel_error = worst_grad;
    out.convex = worst_convex < 1e-10;
    out.gradient_ok = worst_grad < 1e-6;
    return out;
}

DecisionProblem::DecisionProblem(std::vector<std::string> states_, std::vector<std::string> actions_,
                                 std::vector<std::vector<double>> utility_, Belief prior_,
                                 double kappa_, double chi_, double rho_, EntropyModel entropy_)
    : states(std::move(states_)),
      actions(std::move(actions_)),
      utility(std::move(utility_)),
      prior(std::move(prior_)),
      kappa(kappa_),
      chi(chi_),
      rho(rho_),
      entropy(std::move(entropy_)) {
    if (states.size() < 2) throw input_error("problem: need at least 2 states");
    if (actions.size() < 2) throw input_error("problem: need at least 2 actions");
    if (!(kappa > 0.0)) throw input_error("problem: kappa must be positive");
    if (!(chi > 0.0)) throw input_error("problem: chi must be positive");
    if (!(rho > 0.0)) throw input_error("problem: rho must be positive");
    if (utility.size() != actions.size()) throw input_error("problem: utility rows != actions");
    for (const auto& row : utility)
        if (row.size() != states.size()) throw input_error("problem: utility columns != states");
    if (prior.size() != states.size()) throw input_error("problem: prior dimension != states");
}

DecisionProblem binary_match_problem(double prior_upper, double kappa, double chi, double rho) {
    return DecisionProblem({"L", "R"}, {"l", "r"}, {{1.0, -1.0}, {-1.0, 1.0}},
                           Belief({1.0 - prior_upper, prior_upper}), kappa, chi, rho);
}

PayoffResult u_hat(const DecisionProblem& problem, const Belief& q) {
    if (q.size() != problem.n_states())
        throw input_error("u_hat: belief dimension does not match problem states");
    PayoffResult out;
    out.value = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < problem.n_actions(); ++a) {
        double v = 0.0;
        for (std::size_t x = 0; x < problem.n_states(); ++x) v += q[x] * problem.utility[a][x];
        if (v > out.value + 1e-12) {
            out.value = v;
            out.best_actions.assign(1, static_cast<int>(a));
        } else if (v >= out.value - 1e-12) {
            out.value = std::max(out.value, v);
            out.best_actions.push_back(static_cast<int>(a));
        }
    }
    out.best = out.best_actions.front();
    return out;
}

Rotation::Rotation(std::vector<std::vector<double>> matrix_, int order_)
    : matrix(std::move(matrix_)), order(order_) {
    const std::size_t n = matrix.size();
    if (n == 0) throw input_error("rotation: empty matrix");
    for (const auto& row : matrix)
        if (row.size() != n) throw input_error("rotation: matrix not square");
    if (order < 1) throw input_error("rotation: order must be positive");
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (matrix[i][j] < -1e-12) throw input_error("rotation: negative entry");
            col += matrix[i][j];
        }
        if (std::abs(col - 1.0) > 1e-10)
            throw input_error("rotation: column " + std::to_string(j) + " does not sum to 1");
    }
    // R^order must equal the identity (this also certifies full rank).
    std::vector<std::vector<double>> acc(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) acc[i][i] = 1.0;
    for (int k = 0; k < order; ++k) {
        std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t l = 0; l < n; ++l)
                for (std::size_t j = 0; j < n; ++j) next[i][j] += matrix[i][l] * acc[l][j];
        acc = std::move(next);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double expect = (i == j) ? 1.0 : 0.0;
            if (std::abs(acc[i][j] - expect) > 1e-10)
                throw input_error("rotation: R^J is not the identity");
        }
}

Rotation Rotation::swap_binary() { return Rotation({{0.0, 1.0}, {1.0, 0.0}}, 2); }

Belief Rotation::apply(const Belief& q) const {
    const std::size_t n = matrix.size();
    if (q.size() != n) throw input_error("rotation: belief dimension mismatch");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += matrix[i][j] * q[j];
    // Guard tiny negative round-off before revalidating as a Belief.
    double sum = 0.0;
    for (auto& v : out) {
        if (v < 0.0 && v > -1e-15) v = 0.0;
        sum += v;
    }
    for (auto& v : out) v /= sum;
    return Belief(out);
}

SymmetryReport check_rotational_symmetry(const EntropyModel& model, const DecisionProblem& problem,
                                         const Rotation& rotation, int samples,
                                         std::uint64_t seed) {
    if (rotation.matrix.size() != problem.n_states())
        throw input_error("symmetry check: rotation dimension does not match problem");
    Xoshiro256pp rng(seed);
    SymmetryReport rep;
    for (int k = 0; k < samples; ++k) {
        const Belief q = random_interior_belief(rng, problem.n_states(), 1e-6);
        const Belief rq = rotation.apply(q);
        rep.max_entropy_dev =
            std::max(rep.max_entropy_dev, std::abs(model.value(q) - model.value(rq)));
        rep.max_payoff_dev =
            std::max(rep.max_payoff_dev, std::abs(u_hat(problem, q).value - u_hat(problem, rq).value));
    }
    rep.symmetric = rep.max_entropy_dev < 1e-9 && rep.max_payoff_dev < 1e-9;
    return rep;
}

}  // namespace engagemax
