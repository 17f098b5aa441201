#include "engagemax/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace engagemax {

namespace {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// CostSchedule
// ---------------------------------------------------------------------------

CostSchedule::CostSchedule(std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.size() < 1) throw input_error("schedule: need at least one breakpoint");
    if (breakpoints_.front().first != 0.0) throw input_error("schedule: must start at time 0");
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (breakpoints_[i].first <= breakpoints_[i - 1].first)
            throw input_error("schedule: breakpoint times must increase");
        if (breakpoints_[i].second < breakpoints_[i - 1].second - 1e-15)
            throw input_error("schedule: kappa must be nondecreasing");
    }
    for (const auto& [t, k] : breakpoints_)
        if (!(k > 0.0)) throw input_error("schedule: kappa must be positive");
}

CostSchedule CostSchedule::constant(double kappa, double horizon) {
    return CostSchedule({{0.0, kappa}, {horizon, kappa}});
}

double CostSchedule::operator()(double t) const {
    if (t <= 0.0) return breakpoints_.front().second;
    if (t >= breakpoints_.back().first) return breakpoints_.back().second;
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (t <= breakpoints_[i].first) {
            const auto& [t0, k0] = breakpoints_[i - 1];
            const auto& [t1, k1] = breakpoints_[i];
            return k0 + (k1 - k0) * (t - t0) / (t1 - t0);
        }
    }
    return breakpoints_.back().second;
}

double CostSchedule::slope(double t) const {
    if (t > breakpoints_.back().first) return 0.0;
    if (t <= 0.0) t = 1e-300;
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (t <= breakpoints_[i].first) {
            const auto& [t0, k0] = breakpoints_[i - 1];
            const auto& [t1, k1] = breakpoints_[i];
            return (k1 - k0) / (t1 - t0);
        }
    }
    return 0.0;
}

double CostSchedule::integral(double s, double t) const {
    if (t < s) return -integral(t, s);
    // Trapezoid on the exact piecewise-linear function: split at breakpoints.
    std::vector<double> knots{s, t};
    for (const auto& [bt, bk] : breakpoints_)
        if (bt > s && bt < t) knots.push_back(bt);
    std::sort(knots.begin(), knots.end());
    double acc = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double a = knots[i - 1], b = knots[i];
        acc += 0.5 * ((*this)(a) + (*this)(b)) * (b - a);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Increasing delay cost
// ---------------------------------------------------------------------------

namespace {

// Natural cubic-free Catmull-Rom interpolation on a uniform grid.
class UniformSpline {
public:
    UniformSpline() = default;
    UniformSpline(double t0, double dt, std::vector<double> ys)
        : t0_(t0), dt_(dt), ys_(std::move(ys)) {}

    double operator()(double t) const {
        const double u = (t - t0_) / dt_;
        const int n = static_cast<int>(ys_.size());
        int i = static_cast<int>(std::floor(u));
        i = std::clamp(i, 0, n - 2);
        const double x = u - i;
        const double ym = ys_[std::max(0, i - 1)];
        const double y0 = ys_[i];
        const double y1 = ys_[i + 1];
        const double y2 = ys_[std::min(n - 1, i + 2)];
        const double a0 = -0.5 * ym + 1.5 * y0 - 1.5 * y1 + 0.5 * y2;
        const double a1 = ym - 2.5 * y0 + 2.0 * y1 - 0.5 * y2;
        const double a2 = -0.5 * ym + 0.5 * y1;
        return ((a0 * x + a1) * x + a2) * x + y0;
    }

private:
    double t0_ = 0.0;
    double dt_ = 1.0;
    std::vector<double> ys_;
};

struct FrozenCurves {
    UniformSpline cost_coeff;    // c(t)
    UniformSpline frozen_gamma;  // Gamma-bar_t
    UniformSpline dgamma_dkappa; // d Gamma-bar / d kappa at kappa(t)
    UniformSpline entropy_gap;   // E[H - H(prior)]
    UniformSpline payoff_gap;    // E[u_hat - u_hat(prior)]
    UniformSpline support_hi;
    UniformSpline support_lo;
};

struct FrozenPoint {
    double cost_coeff, gamma, dgamma_dkappa, entropy_gap, payoff_gap, lo, hi;
};

FrozenPoint frozen_solve(const DecisionProblem& base, double kappa, bool with_derivative) {
    PrincipalOptions opt;
    opt.monotonicity_scan = false;
    const auto at = [&](double k) {
        DecisionProblem p(base.states, base.actions, base.utility, base.prior, k, base.chi,
                          base.rho, base.entropy);
        return solve_principal(p, opt);
    };
    const PrincipalSolution sol = at(kappa);
    if (sol.degenerate)
        throw numerical_error("increasing cost: frozen solution degenerate at kappa=" +
                              format_double(kappa));
    FrozenPoint fp;
    fp.cost_coeff = sol.cost_coeff;
    fp.gamma = sol.lambda;
    fp.entropy_gap = sol.engagement / base.rho;
    fp.payoff_gap = expected_u_hat(
                        DecisionProblem(base.states, base.actions, base.utility, base.prior, kappa,
                                        base.chi, base.rho, base.entropy),
                        sol.pi_star) -
                    u_hat(base, base.prior).value;
    fp.lo = 1.0;
    fp.hi = 0.0;
    for (const auto& a : sol.pi_star.atoms) {
        fp.lo = std::min(fp.lo, a.belief[1]);
        fp.hi = std::max(fp.hi, a.belief[1]);
    }
    fp.dgamma_dkappa = 0.0;
    if (with_derivative) {
        const double h = 1e-5 * std::max(1.0, kappa);
        const PrincipalSolution up = at(kappa + h);
        const PrincipalSolution dn = at(kappa - h);
        fp.dgamma_dkappa = (up.lambda - dn.lambda) / (2.0 * h);
    }
    return fp;
}

struct OdeRun {
    std::vector<double> grid, big_gamma, small_gamma;
    bool band_violation = false;
};

OdeRun integrate_backward(const DecisionProblem& problem, const CostSchedule& schedule,
                          const FrozenCurves& curves, double gamma_terminal, int n_steps) {
    const double horizon = schedule.horizon();
    const double h = horizon / n_steps;
    const double chi = problem.chi;
    const double rho = problem.rho;

    const auto f = [&](double t, double gamma) {
        const double gbar = curves.frozen_gamma(t);
        const double dh = curves.entropy_gap(t);
        const double slope = schedule.slope(t);
        const double gbar_dot = curves.dgamma_dkappa(t) * slope;
        return (chi / dh) * (gamma - gbar) +
               (gbar / rho) * (slope / chi + rho * gbar_dot / (gbar * gbar)) * gamma;
    };

    OdeRun run;
    run.grid.resize(n_steps + 1);
    run.big_gamma.resize(n_steps + 1);
    run.small_gamma.resize(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) run.grid[i] = horizon * i / n_steps;

    double gamma = gamma_terminal;
    run.big_gamma[n_steps] = gamma;
    for (int i = n_steps; i > 0; --i) {
        const double t = run.grid[i];
        const double k1 = f(t, gamma);
        const double k2 = f(t - 0.5 * h, gamma - 0.5 * h * k1);
        const double k3 = f(t - 0.5 * h, gamma - 0.5 * h * k2);
        const double k4 = f(t - h, gamma - h * k3);
        gamma -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        run.big_gamma[i - 1] = gamma;
        const double gbar = curves.frozen_gamma(run.grid[i - 1]);
        if (gamma < -1e-6 || gamma > gbar + 1e-6) run.band_violation = true;
    }
    for (int i = 0; i <= n_steps; ++i)
        run.small_gamma[i] = f(run.grid[i], run.big_gamma[i]);
    run.small_gamma[n_steps] = 0.0;  // stationary once the cost is constant
    return run;
}

}  // namespace

double IncreasingCostSolution::big_gamma_at(double t) const {
    if (grid.size() < 2) throw numerical_error("increasing cost: empty solution grid");
    const double dt = grid[1] - grid[0];
    int i = static_cast<int>(std::floor((t - grid.front()) / dt));
    i = std::clamp(i, 0, static_cast<int>(grid.size()) - 2);
    const double w = (t - grid[i]) / dt;
    return (1.0 - w) * big_gamma[i] + w * big_gamma[i + 1];
}

double IncreasingCostSolution::gamma_at(double t) const {
    const double dt = grid[1] - grid[0];
    int i = static_cast<int>(std::floor((t - grid.front()) / dt));
    i = std::clamp(i, 0, static_cast<int>(grid.size()) - 2);
    const double w = (t - grid[i]) / dt;
    return (1.0 - w) * small_gamma[i] + w * small_gamma[i + 1];
}

IncreasingCostSolution solve_increasing_cost(const DecisionProblem& problem,
                                             const CostSchedule& schedule,
                                             const IncreasingCostOptions& options) {
    if (problem.n_states() != 2)
        throw capability_error("increasing cost: binary-state problems only");
    const Belief uniform = Belief::uniform(problem.n_states());
    if (problem.prior.max_distance(uniform) > 1e-9)
        throw capability_error("increasing cost: prior must be uniform");
    const SymmetryReport sym =
        check_rotational_symmetry(problem.entropy, problem, Rotation::swap_binary());
    if (!sym.symmetric)
        throw capability_error("increasing cost: payoff or entropy not rotationally symmetric");

    const double horizon = schedule.horizon();

    // Frozen constant-cost solves on a coarse time grid; the ODE coefficients
    // are smooth in t, so cubic interpolation onto the RK4 nodes is cheap and
    // loses nothing at the tolerances used here.
    const int n_coeff = 4000;
    const double dt_c = horizon / n_coeff;
    std::vector<double> cc(n_coeff + 1), gb(n_coeff + 1), dg(n_coeff + 1), eh(n_coeff + 1),
        eu(n_coeff + 1), lo(n_coeff + 1), hi(n_coeff + 1);
    for (int i = 0; i <= n_coeff; ++i) {
        const double t = i * dt_c;
        const bool needs_fd = schedule.slope(t) != 0.0;
        const FrozenPoint fp = frozen_solve(problem, schedule(t), needs_fd);
        cc[i] = fp.cost_coeff;
        gb[i] = fp.gamma;
        dg[i] = fp.dgamma_dkappa;
        eh[i] = fp.entropy_gap;
        eu[i] = fp.payoff_gap;
        lo[i] = fp.lo;
        hi[i] = fp.hi;
        if (fp.lo <= 1e-9 || fp.hi >= 1.0 - 1e-9)
            throw capability_error("increasing cost: frozen support touches the simplex boundary");
    }
    FrozenCurves curves;
    curves.cost_coeff = UniformSpline(0.0, dt_c, cc);
    curves.frozen_gamma = UniformSpline(0.0, dt_c, gb);
    curves.dgamma_dkappa = UniformSpline(0.0, dt_c, dg);
    curves.entropy_gap = UniformSpline(0.0, dt_c, eh);
    curves.payoff_gap = UniformSpline(0.0, dt_c, eu);
    curves.support_lo = UniformSpline(0.0, dt_c, lo);
    curves.support_hi = UniformSpline(0.0, dt_c, hi);

    const double gamma_terminal = gb[n_coeff];

    const double step = options.ode_step > 0.0 ? options.ode_step : 1e-4 * horizon;
    int n_steps = std::max(16, static_cast<int>(std::lround(horizon / step)));

    OdeRun run = integrate_backward(problem, schedule, curves, gamma_terminal, n_steps);
    for (int refine = 0; refine < 4; ++refine) {
        OdeRun finer = integrate_backward(problem, schedule, curves, gamma_terminal, 2 * n_steps);
        double dev = 0.0;
        for (int i = 0; i <= n_steps; ++i) {
            dev = std::max(dev, std::abs(finer.big_gamma[2 * i] - run.big_gamma[i]));
            dev = std::max(dev, std::abs(finer.small_gamma[2 * i] - run.small_gamma[i]));
        }
        const bool converged = dev < options.refine_tol;
        n_steps *= 2;
        run = std::move(finer);
        if (converged && !run.band_violation) break;
        if (refine == 3) {
            if (run.band_violation)
                throw numerical_error("increasing cost: multiplier left the [0, Gamma_t] band");
            throw numerical_error("increasing cost: RK4 refinement did not settle below " +
                                  format_double(options.refine_tol));
        }
    }
    if (run.band_violation)
        throw numerical_error("increasing cost: multiplier left the [0, Gamma_t] band");

    IncreasingCostSolution sol;
    sol.horizon = horizon;
    sol.gamma_terminal_multiplier = gamma_terminal;
    sol.alpha_nominal = options.alpha_nominal;
    sol.grid = run.grid;
    sol.big_gamma = run.big_gamma;
    sol.small_gamma = run.small_gamma;
    const std::size_t n = sol.grid.size();
    sol.support_lo.resize(n);
    sol.support_hi.resize(n);
    sol.cost_coeff.resize(n);
    sol.frozen_lambda.resize(n);
    sol.entropy_gap.resize(n);
    sol.payoff_gap.resize(n);
    sol.gamma_upper.resize(n);
    sol.gamma_upper_dot.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sol.grid[i];
        sol.support_lo[i] = curves.support_lo(t);
        sol.support_hi[i] = curves.support_hi(t);
        sol.cost_coeff[i] = curves.cost_coeff(t);
        sol.gamma_upper[i] = curves.frozen_gamma(t);
        sol.gamma_upper_dot[i] = curves.dgamma_dkappa(t) * schedule.slope(t);
        sol.entropy_gap[i] = curves.entropy_gap(t);
        sol.payoff_gap[i] = curves.payoff_gap(t);
        sol.frozen_lambda[i] = sol.gamma_upper[i] * schedule(t) / problem.chi;
    }

    // t0: earliest grid time from which Gamma stays nonnegative and
    // nondecreasing through T.
    std::size_t first_ok = n - 1;
    for (std::size_t k = n - 1;; --k) {
        const bool ok_here = sol.big_gamma[k] >= -1e-10 &&
                             (k + 1 >= n || sol.big_gamma[k + 1] - sol.big_gamma[k] >= -1e-10);
        if (!ok_here) break;
        first_ok = k;
        if (k == 0) break;
    }
    sol.t0 = sol.grid[first_ok];

    // Time change: identity before t0, then ds/dt = chi / (alpha * E[dH]).
    sol.time_change.resize(n);
    for (std::size_t i = 0; i <= first_ok; ++i) sol.time_change[i] = sol.grid[i];
    for (std::size_t i = first_ok + 1; i < n; ++i) {
        const double dt = sol.grid[i] - sol.grid[i - 1];
        const double rate_a = problem.chi / (options.alpha_nominal * sol.entropy_gap[i - 1]);
        const double rate_b = problem.chi / (options.alpha_nominal * sol.entropy_gap[i]);
        sol.time_change[i] = sol.time_change[i - 1] + 0.5 * (rate_a + rate_b) * dt;
    }
    return sol;
}

double increasing_cost_foc_residual(const IncreasingCostSolution& sol,
                                    const DecisionProblem& problem, const CostSchedule& schedule,
                                    int n_probes) {
    const std::size_t n = sol.grid.size();
    const double h0 = problem.entropy.value(problem.prior);
    const double u0 = u_hat(problem, problem.prior).value;

    // Lambda(t) = rho + c(t) Gamma(t) and its running integral from t0.
    std::vector<double> lam(n), lam_int(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) lam[i] = problem.rho + sol.cost_coeff[i] * sol.big_gamma[i];
    std::size_t i0 = 0;
    while (i0 + 1 < n && sol.grid[i0] < sol.t0 - 1e-15) ++i0;
    for (std::size_t i = i0 + 1; i < n; ++i)
        lam_int[i] = lam_int[i - 1] + 0.5 * (lam[i] + lam[i - 1]) * (sol.grid[i] - sol.grid[i - 1]);

    const auto nu_at = [&](std::size_t k, double q_up) {
        const Belief q({1.0 - q_up, q_up});
        const double hq = problem.entropy.value(q) - h0;
        const double uq = u_hat(problem, q).value - u0;
        // Delay-kernel weight of the participation multipliers: the density
        // gamma on (t0, t] plus the point mass Gamma(t0) sitting at t0 itself.
        double acc = sol.big_gamma[i0] * schedule.integral(sol.grid[i0], sol.grid[k]);
        double prev = sol.small_gamma[i0] * schedule.integral(sol.grid[i0], sol.grid[k]);
        for (std::size_t i = i0 + 1; i <= k; ++i) {
            const double cur = sol.small_gamma[i] * schedule.integral(sol.grid[i], sol.grid[k]);
            acc += 0.5 * (prev + cur) * (sol.grid[i] - sol.grid[i - 1]);
            prev = cur;
        }
        return (problem.rho - lam[k]) * hq + sol.big_gamma[k] * uq + problem.chi * lam_int[k] - acc;
    };

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = 0; j < n_probes; ++j) {
        const std::size_t k =
            i0 + static_cast<std::size_t>((n - 1 - i0) * static_cast<double>(j) / (n_probes - 1));
        const double nu_hi = nu_at(k, sol.support_hi[k]);
        const double nu_lo = nu_at(k, sol.support_lo[k]);
        lo = std::min({lo, nu_hi, nu_lo});
        hi = std::max({hi, nu_hi, nu_lo});
    }
    return hi - lo;
}

// ---------------------------------------------------------------------------
// Bounded belief jumps
// ---------------------------------------------------------------------------

BoundedJumpSolution bounded_jump_solve(const DecisionProblem& problem, double d) {
    if (problem.n_states() != 2)
        throw capability_error("bounded jumps: binary-state problems only");
    if (d < 0.0) throw input_error("bounded jumps: d must be nonnegative");

    const BenchmarkSolution bench = agent_benchmark(problem);
    BoundedJumpSolution out;
    if (!bench.boundaries || bench.posterior.degenerate_at(problem.prior)) {
        // Prior outside the continuation region: stopping is immediate for
        // every jump bound.
        out.degenerate = true;
        out.engagement = 0.0;
        out.support_lo = out.support_hi = problem.prior[1];
        out.bound_description = "degenerate (prior outside the continuation region)";
        return out;
    }
    const auto [qlow, qhigh] = *bench.boundaries;
    // Euclidean jump of size d moves the upper coordinate by d / sqrt(2).
    const double reach = d / std::sqrt(2.0);
    const double floor_q = std::max(0.0, qlow - reach);
    const double cap_q = std::min(1.0, qhigh + reach);

    const PrincipalSolution unres = solve_principal(problem);
    if (unres.degenerate) {
        out.degenerate = true;
        out.engagement = 0.0;
        out.support_lo = out.support_hi = problem.prior[1];
        out.bound_description = "degenerate (prior outside the continuation region)";
        return out;
    }
    double a_star = 1.0, b_star = 0.0;
    for (const auto& atom : unres.pi_star.atoms) {
        a_star = std::min(a_star, atom.belief[1]);
        b_star = std::max(b_star, atom.belief[1]);
    }

    std::ostringstream desc;
    desc << "stopping beliefs restricted to [" << format_double(floor_q) << ", "
         << format_double(cap_q) << "]";
    out.bound_description = desc.str();

    if (a_star >= floor_q - 1e-15 && b_star <= cap_q + 1e-15) {
        out.engagement = unres.engagement;
        out.support_lo = a_star;
        out.support_hi = b_star;
        out.restricted = false;
        return out;
    }

    out.restricted = true;
    double a_c = std::max(a_star, floor_q);
    double b_c = std::min(b_star, cap_q);

    const double q0 = problem.prior[1];
    const auto evaluate = [&](double a, double b) {
        const double w = (q0 - a) / (b - a);
        PosteriorDistribution pi;
        pi.atoms = {{Belief({1.0 - a, a}), 1.0 - w}, {Belief({1.0 - b, b}), w}};
        const double gap = expected_entropy_gap(problem, pi, problem.prior);
        const double slack = (expected_u_hat(problem, pi) - u_hat(problem, problem.prior).value) -
                             problem.cost_ratio() * gap;
        return std::make_pair(gap, slack);
    };

    auto [gap, slack] = evaluate(a_c, b_c);
    if (slack < -1e-12) {
        // Clipped supports violate participation; pull back toward the
        // agent-optimal atoms until the constraint binds.
        double t_lo = 0.0, t_hi = 1.0;
        double a_agent = 1.0, b_agent = 0.0;
        for (const auto& atom : bench.posterior.atoms) {
            a_agent = std::min(a_agent, atom.belief[1]);
            b_agent = std::max(b_agent, atom.belief[1]);
        }
        for (int i = 0; i < 200; ++i) {
            const double t = 0.5 * (t_lo + t_hi);
            const double a = a_agent + t * (a_c - a_agent);
            const double b = b_agent + t * (b_c - b_agent);
            const double s = evaluate(a, b).second;
            if (s >= 0.0)
                t_lo = t;
            else
                t_hi = t;
        }
        a_c = a_agent + t_lo * (a_c - a_agent);
        b_c = b_agent + t_lo * (b_c - b_agent);
        std::tie(gap, slack) = evaluate(a_c, b_c);
    }
    out.engagement = problem.rho * gap;
    out.support_lo = a_c;
    out.support_hi = b_c;
    return out;
}

// ---------------------------------------------------------------------------
// Unlimited capacity
// ---------------------------------------------------------------------------

UnlimitedCapacitySolution unlimited_capacity_solve(const DecisionProblem& problem) {
    UnlimitedCapacitySolution out;
    for (std::size_t x = 0; x < problem.n_states(); ++x) {
        if (problem.prior[x] <= 0.0) continue;
        out.pi_max.atoms.push_back({Belief::vertex(problem.n_states(), x), problem.prior[x]});
    }
    const double gain =
        expected_u_hat(problem, out.pi_max) - u_hat(problem, problem.prior).value;
    if (gain <= 1e-15) {
        out.degenerate = true;
        out.alpha = std::numeric_limits<double>::infinity();
        out.expected_tau = 0.0;
        return out;
    }
    out.alpha = problem.kappa / gain;
    out.expected_tau = gain / problem.kappa;
    return out;
}

// ---------------------------------------------------------------------------
// Suspensive multi-jump paths
// ---------------------------------------------------------------------------

ComposedPath compose_suspensive_path(const DecisionProblem& problem,
                                     const PosteriorDistribution& pi_star, std::uint64_t seed) {
    if (problem.n_states() != 2)
        throw capability_error("suspensive path: binary-state problems only");
    if (pi_star.atoms.size() != 2)
        throw input_error("suspensive path: expected a two-atom stopping distribution");

    const Belief prior = problem.prior;
    const double q0 = prior[1];
    std::size_t lo_idx = pi_star.atoms[0].belief[1] < pi_star.atoms[1].belief[1] ? 0 : 1;
    const Belief atom_lo = pi_star.atoms[lo_idx].belief;
    const Belief atom_hi = pi_star.atoms[1 - lo_idx].belief;
    const double a = atom_lo[1], b = atom_hi[1];
    if (!(a < q0 && q0 < b) || !(a < 1.0 - q0 && 1.0 - q0 < b))
        throw input_error("suspensive path: prior and its mirror must lie strictly inside the support");

    const auto entropy_of = [&](double q) { return problem.entropy.value(Belief({1.0 - q, q})); };

    // Flip fraction: half of all jumps move to the mirrored suspensive belief,
    // capped so the compensating decisive mean stays inside [a, b]. The source
    // leaves this rate free; any capacity-feasible choice is optimal.
    const auto flip_fraction = [&](double s) {
        if (std::abs(s - 0.5) < 1e-12) return 0.0;
        double nu_max;
        if (s < 0.5)
            nu_max = (s - a) / (1.0 - s - a);
        else
            nu_max = (b - s) / (b - (1.0 - s));
        return std::min(0.5, 0.9 * nu_max);
    };

    ComposedPath path{{}, {}, prior, prior, 0.0, 0.0};
    Xoshiro256pp rng(derive_seed(seed, 0));

    double t = 0.0;
    double s = q0;
    for (int guard = 0; guard < 100000; ++guard) {
        const double nu = flip_fraction(s);
        const double mirror = 1.0 - s;
        // Decisive destination mean compensates the flip drift.
        const double mu = nu > 0.0 ? (s - nu * mirror) / (1.0 - nu) : s;
        const double w_hi = (mu - a) / (b - a);
        const double mean_h = nu * entropy_of(mirror) +
                              (1.0 - nu) * ((1.0 - w_hi) * entropy_of(a) + w_hi * entropy_of(b));
        const double info_per_jump = mean_h - entropy_of(s);
        const double rate = problem.chi / info_per_jump;

        t += -std::log(rng.uniform01()) / rate;
        const double u = rng.uniform01();
        if (u < nu) {
            s = mirror;
            path.jump_times.push_back(t);
            path.beliefs.push_back(Belief({1.0 - s, s}));
            continue;
        }
        const double v = (u - nu) / (1.0 - nu);
        path.terminal_belief = (v < w_hi) ? atom_hi : atom_lo;
        path.stop_time = t;
        path.info_total = problem.chi * t;
        return path;
    }
    throw numerical_error("suspensive path: jump guard exceeded");
}

// ---------------------------------------------------------------------------
// Teacher-student
// ---------------------------------------------------------------------------

DecisionProblem teacher_four_state_problem(double kappa, double chi, double rho) {
    // States ordered L0, R0, L1, R1: the first letter is the test-relevant
    // dimension, the digit the irrelevant one. Actions answer the test only.
    return DecisionProblem({"L0", "R0", "L1", "R1"}, {"l", "r"},
                           {{1.0, -1.0, 1.0, -1.0}, {-1.0, 1.0, -1.0, 1.0}},
                           Belief::uniform(4), kappa, chi, rho);
}

namespace {

// Shannon RI objective of a conditional-choice table at cost c under the
// uniform four-state prior.
double table_objective(const std::vector<std::vector<double>>& p_a_given_x,
                       const DecisionProblem& problem, double c) {
    const std::size_t na = p_a_given_x.size();
    const std::size_t nx = problem.n_states();
    std::vector<double> pa(na, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t x = 0; x < nx; ++x) pa[a] += problem.prior[x] * p_a_given_x[a][x];
    double payoff = 0.0, info = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t x = 0; x < nx; ++x) {
            const double joint = problem.prior[x] * p_a_given_x[a][x];
            if (joint <= 0.0) continue;
            payoff += joint * problem.utility[a][x];
            info += joint * std::log(p_a_given_x[a][x] / pa[a]);
        }
    }
    return payoff - c * info;
}

}  // namespace

TeacherEngagementReport teacher_engagement_max(int n_compression_samples, std::uint64_t seed) {
    TeacherEngagementReport rep;
    rep.binary = solve_principal(binary_match_problem(0.5, 2.0, 1.0, 1.0));
    const DecisionProblem four = teacher_four_state_problem();
    rep.four_state = solve_principal(four);

    rep.objective_gap = std::abs(rep.four_state.engagement - rep.binary.engagement);
    rep.lambda_gap = std::abs(rep.four_state.lambda - rep.binary.lambda);

    double qlo = 1.0, qhi = 0.0;
    for (const auto& atom : rep.binary.pi_star.atoms) {
        qlo = std::min(qlo, atom.belief[1]);
        qhi = std::max(qhi, atom.belief[1]);
    }
    rep.irrelevant_marginal_dev = 0.0;
    rep.relevant_support_dev = 0.0;
    for (const auto& atom : rep.four_state.pi_star.atoms) {
        const double q_irrelevant0 = atom.belief[0] + atom.belief[1];  // L0 + R0
        const double q_relevant_r = atom.belief[1] + atom.belief[3];   // R0 + R1
        rep.irrelevant_marginal_dev =
            std::max(rep.irrelevant_marginal_dev, std::abs(q_irrelevant0 - 0.5));
        rep.relevant_support_dev =
            std::max(rep.relevant_support_dev,
                     std::min(std::abs(q_relevant_r - qlo), std::abs(q_relevant_r - qhi)));
    }

    // Compression invariance: averaging a conditional table over the
    // irrelevant dimension keeps the payoff and weakly lowers the information
    // cost, so the objective weakly improves at any cost coefficient. Sampled
    // at the solved coefficient and at free draws from (0, kappa/chi).
    Xoshiro256pp rng(seed);
    rep.compression_gain_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_compression_samples; ++k) {
        const double c =
            (k % 4 == 0) ? rep.binary.cost_coeff : (0.05 + 1.9 * rng.uniform01());
        std::vector<std::vector<double>> table(2, std::vector<double>(4, 0.0));
        for (std::size_t x = 0; x < 4; ++x) {
            const double u = 0.02 + 0.96 * rng.uniform01();
            table[0][x] = u;
            table[1][x] = 1.0 - u;
        }
        std::vector<std::vector<double>> averaged = table;
        for (std::size_t a = 0; a < 2; ++a) {
            const double avg_l = 0.5 * (table[a][0] + table[a][2]);
            const double avg_r = 0.5 * (table[a][1] + table[a][3]);
            averaged[a][0] = averaged[a][2] = avg_l;
            averaged[a][1] = averaged[a][3] = avg_r;
        }
        const double gain =
            table_objective(averaged, four, c) - table_objective(table, four, c);
        rep.compression_gain_min = std::min(rep.compression_gain_min, gain);
    }

    rep.pass = rep.objective_gap < 1e-9 && rep.lambda_gap < 1e-9 &&
               rep.irrelevant_marginal_dev < 1e-9 && rep.relevant_support_dev < 1e-9 &&
               rep.compression_gain_min > -1e-12;
    return rep;
}

TeacherKnowledgeReport teacher_knowledge_max() {
    // Composite actions (answer, guess) over states (relevant, irrelevant):
    // the logit table P(a|t) ~ exp(u(a,t)/2) with u = match(answer, relevant)
    // + lambda * match(guess, irrelevant). States L0, R0, L1, R1; actions
    // (l,0), (r,0), (l,1), (r,1).
    const auto table_for = [](double lambda) {
        std::array<std::array<double, 4>, 4> t{};
        const int ans_state[4] = {0, 1, 0, 1};   // relevant component per state
        const int irr_state[4] = {0, 0, 1, 1};   // irrelevant component per state
        const int ans_act[4] = {0, 1, 0, 1};
        const int guess_act[4] = {0, 0, 1, 1};
        for (int x = 0; x < 4; ++x) {
            double z = 0.0;
            std::array<double, 4> e{};
            for (int a = 0; a < 4; ++a) {
                const double u = (ans_act[a] == ans_state[x] ? 1.0 : -1.0) +
                                 lambda * (guess_act[a] == irr_state[x] ? 1.0 : -1.0);
                e[a] = std::exp(0.5 * u);
                z += e[a];
            }
            for (int a = 0; a < 4; ++a) t[a][x] = e[a] / z;
        }
        return t;
    };

    const auto student_net = [&](double lambda) {
        const auto t = table_for(lambda);
        const int ans_state[4] = {0, 1, 0, 1};
        const int ans_act[4] = {0, 1, 0, 1};
        std::array<double, 4> pa{};
        for (int a = 0; a < 4; ++a)
            for (int x = 0; x < 4; ++x) pa[a] += 0.25 * t[a][x];
        double payoff = 0.0, info = 0.0;
        for (int a = 0; a < 4; ++a) {
            for (int x = 0; x < 4; ++x) {
                const double joint = 0.25 * t[a][x];
                payoff += joint * (ans_act[a] == ans_state[x] ? 1.0 : -1.0);
                info += joint * std::log(t[a][x] / pa[a]);
            }
        }
        return payoff - 2.0 * info;
    };

    // The student's surplus is positive with no extra knowledge and negative
    // when the irrelevant dimension is taught precisely; bisect the root.
    double lo = 1e-9, hi = 10.0;
    if (!(student_net(lo) > 0.0) || !(student_net(hi) < 0.0))
        throw numerical_error("teacher: student participation has no binding root in bracket");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_net(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    TeacherKnowledgeReport rep;
    rep.lambda = 0.5 * (lo + hi);
    rep.table = table_for(rep.lambda);
    rep.ic_residual = std::abs(student_net(rep.lambda));

    for (int a = 0; a < 4; ++a) {
        rep.default_rule[a] = 0.0;
        for (int x = 0; x < 4; ++x) rep.default_rule[a] += 0.25 * rep.table[a][x];
    }
    // Marginalize out the irrelevant dimension: answer pairs {a1,a3}, {a2,a4}
    // against state pairs {L0,L1}, {R0,R1}.
    const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
    rep.marginal_dev = 0.0;
    for (int ans = 0; ans < 2; ++ans) {
        for (int rel = 0; rel < 2; ++rel) {
            double m = 0.0;
            for (int g = 0; g < 2; ++g)
                for (int irr = 0; irr < 2; ++irr)
                    m += 0.5 * rep.table[ans + 2 * g][rel + 2 * irr];
            rep.marginal[ans][rel] = m;
            const double expect = (ans == rel) ? p : 1.0 - p;
            rep.marginal_dev = std::max(rep.marginal_dev, std::abs(m - expect));
        }
    }
    return rep;
}

}  // namespace engagemax
