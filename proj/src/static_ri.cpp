#include "engagemax/static_ri.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "engagemax/simplex_lp.hpp"

namespace engagemax {

namespace {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace

Belief PosteriorDistribution::barycenter() const {
    if (atoms.empty()) throw input_error("posterior: no atoms");
    std::vector<double> mean(atoms.front().belief.size(), 0.0);
    double wsum = 0.0;
    for (const auto& a : atoms) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += a.weight * a.belief[i];
        wsum += a.weight;
    }
    for (auto& m : mean) m /= wsum;
    return Belief(mean);
}

bool PosteriorDistribution::degenerate_at(const Belief& prior, double tol) const {
    for (const auto& a : atoms)
        if (a.belief.max_distance(prior) > tol) return false;
    return true;
}

void PosteriorDistribution::validate(const Belief& prior) const {
    double wsum = 0.0;
    for (const auto& a : atoms) {
        if (!(a.weight > 0.0)) throw input_error("posterior: nonpositive weight");
        wsum += a.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-10)
        throw input_error("posterior: weights sum to " + format_double(wsum));
    const Belief mean = barycenter();
    if (mean.max_distance(prior) > 1e-8)
        throw input_error("posterior: barycenter differs from prior by " +
                          format_double(mean.max_distance(prior)));
}

PosteriorDistribution PosteriorDistribution::degenerate(const Belief& prior) {
    return PosteriorDistribution{{{prior, 1.0}}};
}

double expected_u_hat(const DecisionProblem& problem, const PosteriorDistribution& pi) {
    double v = 0.0;
    for (const auto& a : pi.atoms) v += a.weight * u_hat(problem, a.belief).value;
    return v;
}

double expected_entropy_gap(const DecisionProblem& problem, const PosteriorDistribution& pi,
                            const Belief& q0) {
    double v = 0.0;
    const double h0 = problem.entropy.value(q0);
    for (const auto& a : pi.atoms) v += a.weight * (problem.entropy.value(a.belief) - h0);
    return v;
}

namespace {

// ---------------------------------------------------------------------------
// Shannon path: logit fixed point on the unconditional action probabilities,
// i.e. p(a) <- p(a) * sum_x prior(x) B(a,x) / Z(x), B(a,x) = exp(u(a,x)/c),
// Z(x) = sum_b p(b) B(b,x). After pruning, a short Newton polish on log p
// drives the first-order conditions to machine precision.
// ---------------------------------------------------------------------------

struct ShannonWork {
    std::vector<std::vector<double>> b;  // b[a][x] = exp(u(a,x)/c), max-shifted per state
    std::vector<double> prior;
    std::size_t na = 0, nx = 0;
};

ShannonWork make_work(const DecisionProblem& problem, double c) {
    ShannonWork w;
    w.na = problem.n_actions();
    w.nx = problem.n_states();
    w.prior = problem.prior.probs();
    w.b.assign(w.na, std::vector<double>(w.nx, 0.0));
    for (std::size_t x = 0; x < w.nx; ++x) {
        double umax = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < w.na; ++a) umax = std::max(umax, problem.utility[a][x]);
        for (std::size_t a = 0; a < w.na; ++a)
            w.b[a][x] = std::exp((problem.utility[a][x] - umax) / c);
    }
    return w;
}

// N(a) = sum_x prior(x) B(a,x) / Z(x); the fixed point has N(a) = 1 on the
// support and N(a) <= 1 off it.
std::vector<double> fixed_point_gain(const ShannonWork& w, const std::vector<double>& p,
                                     const std::vector<int>& support) {
    std::vector<double> z(w.nx, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x)
        for (int a : support) z[x] += p[a] * w.b[a][x];
    std::vector<double> gain(w.na, 0.0);
    for (std::size_t a = 0; a < w.na; ++a) {
        double g = 0.0;
        for (std::size_t x = 0; x < w.nx; ++x)
            if (w.prior[x] > 0.0) g += w.prior[x] * w.b[a][x] / z[x];
        gain[a] = g;
    }
    return gain;
}

bool newton_polish(const ShannonWork& w, std::vector<double>& p, const std::vector<int>& support) {
    const std::size_t m = support.size();
    if (m <= 1) return true;
    for (int iter = 0; iter < 60; ++iter) {
        std::vector<double> z(w.nx, 0.0);
        for (std::size_t x = 0; x < w.nx; ++x)
            for (int a : support) z[x] += p[a] * w.b[a][x];
        std::vector<double> f(m, 0.0);
        std::vector<std::vector<double>> jac(m, std::vector<double>(m, 0.0));
        double fmax = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const int a = support[i];
            double n = 0.0;
            for (std::size_t x = 0; x < w.nx; ++x)
                if (w.prior[x] > 0.0) n += w.prior[x] * w.b[a][x] / z[x];
            f[i] = std::log(n);
            fmax = std::max(fmax, std::abs(f[i]));
            for (std::size_t j = 0; j < m; ++j) {
                const int bj = support[j];
                double d = 0.0;
                for (std::size_t x = 0; x < w.nx; ++x)
                    if (w.prior[x] > 0.0)
                        d += w.prior[x] * w.b[a][x] * w.b[bj][x] * p[bj] / (z[x] * z[x]);
                jac[i][j] = -d / n;
            }
        }
        if (fmax < 1e-14) return true;
        // Solve jac * step = -f by Gaussian elimination with partial pivoting.
        std::vector<double> rhs(m);
        for (std::size_t i = 0; i < m; ++i) rhs[i] = -f[i];
        for (std::size_t col = 0; col < m; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < m; ++r)
                if (std::abs(jac[r][col]) > std::abs(jac[piv][col])) piv = r;
            if (std::abs(jac[piv][col]) < 1e-300) return false;
            std::swap(jac[piv], jac[col]);
            std::swap(rhs[piv], rhs[col]);
            for (std::size_t r = col + 1; r < m; ++r) {
                const double fct = jac[r][col] / jac[col][col];
                for (std::size_t cc = col; cc < m; ++cc) jac[r][cc] -= fct * jac[col][cc];
                rhs[r] -= fct * rhs[col];
            }
        }
        std::vector<double> step(m, 0.0);
        for (int i = static_cast<int>(m) - 1; i >= 0; --i) {
            double s = rhs[i];
            for (std::size_t j = i + 1; j < m; ++j) s -= jac[i][j] * step[j];
            step[i] = s / jac[i][i];
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double capped = std::clamp(step[i], -2.0, 2.0);
            p[support[i]] *= std::exp(capped);
            if (!std::isfinite(p[support[i]])) return false;
        }
        // Renormalize over the support to tame drift along the scale direction.
        double sum = 0.0;
        for (int a : support) sum += p[a];
        for (int a : support) p[a] /= sum;
    }
    return false;
}

StaticRIResult solve_shannon(const DecisionProblem& problem, double c,
                             const StaticRIOptions& options) {
    const ShannonWork w = make_work(problem, c);
    std::vector<int> all(w.na);
    for (std::size_t a = 0; a < w.na; ++a) all[a] = static_cast<int>(a);

    std::vector<double> p(w.na, 1.0 / static_cast<double>(w.na));
    int iterations = 0;
    double step = std::numeric_limits<double>::infinity();
    while (iterations < options.max_iterations) {
        const std::vector<double> gain = fixed_point_gain(w, p, all);
        step = 0.0;
        double sum = 0.0;
        for (std::size_t a = 0; a < w.na; ++a) {
            const double np = p[a] * gain[a];
            step = std::max(step, std::abs(np - p[a]));
            p[a] = np;
            sum += np;
        }
        for (auto& v : p) v /= sum;
        ++iterations;
        if (step < options.fixed_point_tol) break;
    }
    const bool hit_cap = step >= options.fixed_point_tol;

    std::vector<int> support;
    for (std::size_t a = 0; a < w.na; ++a)
        if (p[a] >= options.prune_tol) support.push_back(static_cast<int>(a));
    if (support.empty()) throw numerical_error("static RI: empty support after pruning");

    // Re-solve restricted to the detected support, then polish with Newton so
    // the first-order conditions hold to machine precision. An action kept by
    // the step-size stop but absent from the true support has no finite fixed
    // point; Newton drives its probability to zero, so prune and repeat until
    // the support is stable.
    std::vector<double> ps(w.na, 0.0);
    {
        double sum = 0.0;
        for (int a : support) sum += p[a];
        for (int a : support) ps[a] = p[a] / sum;
    }
    for (int round = 0; round < static_cast<int>(w.na) + 1; ++round) {
        for (int k = 0; k < 200; ++k) {
            const std::vector<double> gain = fixed_point_gain(w, ps, support);
            double sum = 0.0, st = 0.0;
            for (int a : support) {
                const double np = ps[a] * gain[a];
                st = std::max(st, std::abs(np - ps[a]));
                ps[a] = np;
                sum += np;
            }
            for (int a : support) ps[a] /= sum;
            if (st < 1e-13) break;
        }
        newton_polish(w, ps, support);
        std::vector<int> kept;
        for (int a : support)
            if (ps[a] >= options.prune_tol) kept.push_back(a);
        if (kept.empty()) {
            kept.push_back(support.front());
            for (int a : support)
                if (ps[a] > ps[kept.front()]) kept.front() = a;
        }
        if (kept.size() == support.size()) break;
        for (int a : support)
            if (std::find(kept.begin(), kept.end(), a) == kept.end()) ps[a] = 0.0;
        double sum = 0.0;
        for (int a : kept) sum += ps[a];
        for (int a : kept) ps[a] /= sum;
        support = std::move(kept);
    }

    StaticRIResult out;
    out.iterations = iterations;

    // First-order verification: on the support the gain must be one (the
    // polished fixed point); off it, a gain above one flags richer support.
    const std::vector<double> gain = fixed_point_gain(w, ps, support);
    for (int a : support) {
        if (std::abs(gain[a] - 1.0) > 1e-9) {
            if (hit_cap)
                throw numerical_error("static RI: fixed point did not converge, last update " +
                                      format_double(step));
            throw numerical_error("static RI: first-order conditions violated on the support (" +
                                  format_double(gain[a] - 1.0) + ")");
        }
    }
    for (std::size_t a = 0; a < w.na; ++a) {
        const bool in_support = std::find(support.begin(), support.end(), static_cast<int>(a)) !=
                                support.end();
        if (!in_support && gain[a] > 1.0 + 1e-8) out.richer_support_flag = true;
    }

    // Posteriors q_a(x) = prior(x) B(a,x) / Z(x), normalized.
    std::vector<double> z(w.nx, 0.0);
    for (std::size_t x = 0; x < w.nx; ++x)
        for (int a : support) z[x] += ps[a] * w.b[a][x];
    std::vector<PosteriorDistribution::Atom> atoms;
    for (int a : support) {
        std::vector<double> q(w.nx, 0.0);
        double sum = 0.0;
        for (std::size_t x = 0; x < w.nx; ++x) {
            q[x] = w.prior[x] > 0.0 ? w.prior[x] * w.b[a][x] / z[x] : 0.0;
            sum += q[x];
        }
        for (auto& v : q) v /= sum;
        atoms.push_back({Belief(q), ps[a]});
    }
    // Merge coincident posteriors (tied actions).
    std::vector<PosteriorDistribution::Atom> merged;
    for (const auto& atom : atoms) {
        bool found = false;
        for (auto& m : merged) {
            if (m.belief.max_distance(atom.belief) < 1e-9) {
                m.weight += atom.weight;
                found = true;
                break;
            }
        }
        if (!found) merged.push_back(atom);
    }
    out.posterior.atoms = std::move(merged);

    if (out.posterior.degenerate_at(problem.prior, options.degenerate_tol))
        out.posterior = PosteriorDistribution::degenerate(problem.prior);

    out.value = expected_u_hat(problem, out.posterior) -
                c * expected_entropy_gap(problem, out.posterior, problem.prior);
    return out;
}

// ---------------------------------------------------------------------------
// Binary custom-entropy path: concavify phi(q) = u_hat(q) - c H(q) on [0,1]
// by a grid scan for the chord bracketing the prior, then sharpen the two
// touch points by golden-section tangency iterations.
// ---------------------------------------------------------------------------

double golden_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

StaticRIResult solve_binary_concavify(const DecisionProblem& problem, double c,
                                      const StaticRIOptions& options) {
    const auto phi = [&](double q) {
        const Belief b({1.0 - q, q});
        return u_hat(problem, b).value - c * problem.entropy.value(b);
    };
    const double prior = problem.prior[1];

    const int n = 10000;  // grid step 1e-4
    const double h = 1.0 / n;
    std::vector<double> vals(n + 1);
    for (int i = 0; i <= n; ++i) vals[i] = phi(i * h);

    // Upper concave envelope via a monotone hull scan.
    std::vector<int> hull;
    for (int i = 0; i <= n; ++i) {
        while (hull.size() >= 2) {
            const int j = hull[hull.size() - 1];
            const int k = hull[hull.size() - 2];
            const double cross = (vals[j] - vals[k]) * (i - k) - (vals[i] - vals[k]) * (j - k);
            if (cross <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }
    // Segment containing the prior.
    int seg = 0;
    while (seg + 1 < static_cast<int>(hull.size()) && hull[seg + 1] * h < prior) ++seg;
    if (seg + 1 >= static_cast<int>(hull.size())) seg = static_cast<int>(hull.size()) - 2;
    double qa = hull[seg] * h;
    double qb = hull[seg + 1] * h;

    StaticRIResult out;
    if (qb - qa <= 1.5 * h) {
        // The prior sits on (or next to) a touching point: no information.
        out.posterior = PosteriorDistribution::degenerate(problem.prior);
        out.value = u_hat(problem, problem.prior).value;
        return out;
    }

    // Tangency refinement: alternate slope updates with local maximizations of
    // phi(q) - slope * q around each endpoint.
    for (int iter = 0; iter < 100; ++iter) {
        const double slope = (phi(qb) - phi(qa)) / (qb - qa);
        const auto g = [&](double q) { return phi(q) - slope * q; };
        const double la = std::max(0.0, qa - 2.0 * h), ra = std::min(qb - h, qa + 2.0 * h);
        const double lb = std::max(qa + h, qb - 2.0 * h), rb = std::min(1.0, qb + 2.0 * h);
        const double na = golden_max(g, la, ra, 1e-12);
        const double nb = golden_max(g, lb, rb, 1e-12);
        const double move = std::max(std::abs(na - qa), std::abs(nb - qb));
        qa = na;
        qb = nb;
        if (move < 1e-10) break;
    }

    if (prior <= qa + 1e-12 || prior >= qb - 1e-12) {
        out.posterior = PosteriorDistribution::degenerate(problem.prior);
        out.value = u_hat(problem, problem.prior).value;
        return out;
    }
    const double wb = (prior - qa) / (qb - qa);
    out.posterior.atoms = {{Belief({1.0 - qa, qa}), 1.0 - wb}, {Belief({1.0 - qb, qb}), wb}};
    if (out.posterior.degenerate_at(problem.prior, options.degenerate_tol)) {
        out.posterior = PosteriorDistribution::degenerate(problem.prior);
        out.value = u_hat(problem, problem.prior).value;
        return out;
    }
    out.value = expected_u_hat(problem, out.posterior) -
                c * expected_entropy_gap(problem, out.posterior, problem.prior);
    // The degenerate mixture is always feasible; never return less than it.
    const double stay = u_hat(problem, problem.prior).value;
    if (out.value < stay) {
        out.posterior = PosteriorDistribution::degenerate(problem.prior);
        out.value = stay;
    }
    return out;
}

}  // namespace

StaticRIResult solve_static_ri_detailed(const DecisionProblem& problem, double cost_scale,
                                        const StaticRIOptions& options) {
    if (!(cost_scale > 0.0)) throw input_error("static RI: cost scale must be positive");
    if (problem.entropy.is_shannon()) return solve_shannon(problem, cost_scale, options);
    if (problem.n_states() != 2)
        throw capability_error("static RI: custom entropy supported only for binary states");
    return solve_binary_concavify(problem, cost_scale, options);
}

PosteriorDistribution solve_static_ri(const DecisionProblem& problem, double cost_scale,
                                      const StaticRIOptions& options) {
    return solve_static_ri_detailed(problem, cost_scale, options).posterior;
}

namespace {

// Bisect the edge of the set of priors with a non-degenerate solution,
// starting from an interior anchor. dir = +1 searches upward.
double bisect_boundary(const DecisionProblem& problem, double cost, double anchor, int dir) {
    const auto nondegenerate = [&](double q0) {
        if (q0 <= 0.0 || q0 >= 1.0) return false;
        DecisionProblem p(problem.states, problem.actions, problem.utility, Belief({1.0 - q0, q0}),
                          problem.kappa, problem.chi, problem.rho, problem.entropy);
        const auto r = solve_static_ri_detailed(p, cost);
        return !r.posterior.degenerate_at(p.prior);
    };
    double inside = anchor;
    double outside = dir > 0 ? 1.0 : 0.0;
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (inside + outside);
        if (nondegenerate(mid))
            inside = mid;
        else
            outside = mid;
        if (std::abs(inside - outside) < 1e-12) break;
    }
    return 0.5 * (inside + outside);
}

}  // namespace

BenchmarkSolution agent_benchmark(const DecisionProblem& problem) {
    const double cost = problem.cost_ratio();
    const StaticRIResult res = solve_static_ri_detailed(problem, cost);

    BenchmarkSolution out;
    out.posterior = res.posterior;
    out.value = res.value;
    const double act_now = u_hat(problem, problem.prior).value;
    out.continuation = out.value > act_now + 1e-10;

    if (problem.n_states() == 2) {
        double anchor = problem.prior[1];
        bool have_anchor = !res.posterior.degenerate_at(problem.prior);
        if (!have_anchor) {
            // Scan for any prior with a non-degenerate solution to anchor the
            // boundary bisection.
            for (int i = 1; i < 200 && !have_anchor; ++i) {
                const double q0 = i / 200.0;
                DecisionProblem p(problem.states, problem.actions, problem.utility,
                                  Belief({1.0 - q0, q0}), problem.kappa, problem.chi, problem.rho,
                                  problem.entropy);
                if (!solve_static_ri_detailed(p, cost).posterior.degenerate_at(p.prior)) {
                    anchor = q0;
                    have_anchor = true;
                }
            }
        }
        if (have_anchor) {
            const double lower = bisect_boundary(problem, cost, anchor, -1);
            const double upper = bisect_boundary(problem, cost, anchor, +1);
            out.boundaries = std::make_pair(lower, upper);
        }
    }
    return out;
}

double restricted_value(const DecisionProblem& problem, const Belief& q,
                        const PosteriorDistribution& pi) {
    if (q.size() != problem.n_states()) throw input_error("restricted_value: dimension mismatch");
    const std::size_t n = pi.atoms.size();
    const double uhq = u_hat(problem, q).value;
    const double hq = problem.entropy.value(q);
    const double cost = problem.cost_ratio();

    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& atom = pi.atoms[i];
        c[i] = u_hat(problem, atom.belief).value - uhq -
               cost * (problem.entropy.value(atom.belief) - hq);
    }
    // Constraints: sum_i w_i q_i(x) = q(x) for every state (these imply the
    // weights sum to one because each atom sums to one).
    std::vector<std::vector<double>> a(problem.n_states(), std::vector<double>(n, 0.0));
    std::vector<double> b(problem.n_states());
    for (std::size_t x = 0; x < problem.n_states(); ++x) {
        for (std::size_t i = 0; i < n; ++i) a[x][i] = pi.atoms[i].belief[x];
        b[x] = q[x];
    }
    const LpResult lp = solve_lp_max(c, a, b);
    if (lp.status == LpStatus::infeasible)
        throw input_error("restricted_value: belief outside the convex hull of the support");
    if (lp.status != LpStatus::optimal)
        throw numerical_error("restricted_value: LP did not reach an optimum");
    return lp.objective;
}

BeliefClass classify_belief(const DecisionProblem& problem, const Belief& q,
                            const PosteriorDistribution& pi) {
    for (const auto& atom : pi.atoms)
        if (q.max_distance(atom.belief) < 1e-8) return BeliefClass::Decisive;
    try {
        const double vr = restricted_value(problem, q, pi);
        return vr >= -1e-9 ? BeliefClass::Suspensive : BeliefClass::Stop;
    } catch (const input_error&) {
        return BeliefClass::Stop;  // outside the convex hull
    }
}

const char* to_string(BeliefClass c) {
    switch (c) {
        case BeliefClass::Decisive: return "decisive";
        case BeliefClass::Suspensive: return "suspensive";
        case BeliefClass::Stop: return "stop";
    }
    return "?";
}

}  // namespace engagemax
