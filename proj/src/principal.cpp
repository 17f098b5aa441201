#include "engagemax/principal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace engagemax {

namespace {

// Participation residual at effective cost c: E[u - u(q0)] - (kappa/chi) E[H - H(q0)]
// under the static solution at cost c. Positive residual = slack for the agent.
struct GEval {
    double g = 0.0;
    bool degenerate = false;
    PosteriorDistribution posterior;
};

GEval eval_g(const DecisionProblem& problem, double c) {
    GEval out;
    out.posterior = solve_static_ri(problem, c);
    out.degenerate = out.posterior.degenerate_at(problem.prior);
    if (out.degenerate) {
        out.g = 0.0;
        return out;
    }
    const double act_now = u_hat(problem, problem.prior).value;
    out.g = (expected_u_hat(problem, out.posterior) - act_now) -
            problem.cost_ratio() * expected_entropy_gap(problem, out.posterior, problem.prior);
    return out;
}

PrincipalSolution degenerate_solution(const DecisionProblem& problem) {
    PrincipalSolution s;
    s.pi_star = PosteriorDistribution::degenerate(problem.prior);
    s.degenerate = true;
    s.lambda = 0.0;
    s.cost_coeff = problem.cost_ratio();
    s.alpha_star = 0.0;
    s.engagement = 0.0;
    s.agent_value = u_hat(problem, problem.prior).value;
    s.binding_residual = 0.0;
    s.binding = true;
    return s;
}

}  // namespace

bool check_assumption(const DecisionProblem& problem) {
    const double cost = problem.cost_ratio();
    const double lhs =
        u_hat(problem, problem.prior).value - cost * problem.entropy.value(problem.prior);
    double rhs = 0.0;
    for (std::size_t x = 0; x < problem.n_states(); ++x) {
        const Belief ex = Belief::vertex(problem.n_states(), x);
        rhs += problem.prior[x] * (u_hat(problem, ex).value - cost * problem.entropy.value(ex));
    }
    return lhs > rhs;
}

PrincipalSolution solve_principal(const DecisionProblem& problem, const PrincipalOptions& options) {
    if (!check_assumption(problem))
        throw capability_error(
            "principal: full learning is not prohibitively costly (assumption violated)");

    const double cmax = problem.cost_ratio();
    const double lo = options.bracket_eps;
    const double hi = cmax - options.bracket_eps;

    GEval at_hi = eval_g(problem, hi);
    if (at_hi.degenerate || at_hi.g < 0.0) return degenerate_solution(problem);

    GEval at_lo = eval_g(problem, lo);
    if (!(at_lo.g < 0.0)) {
        std::ostringstream diag;
        diag << "principal: no sign change on the cost bracket; g curve:";
        for (int i = 0; i <= 8; ++i) {
            const double c = lo + (hi - lo) * i / 8.0;
            char buf[64];
            std::snprintf(buf, sizeof(buf), " g(%.6g)=%.6g", c, eval_g(problem, c).g);
            diag << buf;
        }
        throw numerical_error(diag.str());
    }

    if (options.monotonicity_scan && options.scan_points > 2) {
        double prev = at_lo.g;
        for (int i = 1; i < options.scan_points; ++i) {
            const double c = lo + (hi - lo) * i / (options.scan_points - 1.0);
            const double g = (i == options.scan_points - 1) ? at_hi.g : eval_g(problem, c).g;
            if (g < prev - 1e-9) {
                char buf[128];
                std::snprintf(buf, sizeof(buf),
                              "principal: participation residual not monotone near c=%.6g "
                              "(%.3e -> %.3e)",
                              c, prev, g);
                throw numerical_error(buf);
            }
            prev = g;
        }
    }

    // Bisection: g < 0 at lo, g > 0 at hi, g nondecreasing in c.
    double a = lo, b = hi;
    GEval best = at_hi;
    double c_root = hi;
    for (int it = 0; it < options.max_bisection_steps; ++it) {
        const double mid = 0.5 * (a + b);
        const GEval gm = eval_g(problem, mid);
        if (std::abs(gm.g) < std::abs(best.g) && !gm.degenerate) {
            best = gm;
            c_root = mid;
        }
        if (std::abs(gm.g) < options.residual_tol && !gm.degenerate) break;
        if (gm.g < 0.0)
            a = mid;
        else
            b = mid;
        if (b - a < 1e-15) break;
    }

    PrincipalSolution s;
    s.pi_star = best.posterior;
    s.cost_coeff = c_root;
    s.lambda = problem.rho / (cmax - c_root);
    const double gap = expected_entropy_gap(problem, s.pi_star, problem.prior);
    if (!(gap > 0.0)) return degenerate_solution(problem);
    s.engagement = problem.rho * gap;
    s.alpha_star = problem.chi / gap;
    s.agent_value =
        expected_u_hat(problem, s.pi_star) - problem.kappa * gap / problem.chi;
    s.binding_residual = best.g;
    s.binding = std::abs(best.g) <= 1e-8;
    s.degenerate = false;
    return s;
}

ExtremeBeliefsReport verify_extreme_beliefs(const DecisionProblem& problem) {
    ExtremeBeliefsReport rep;
    const PrincipalSolution ps = solve_principal(problem);
    const BenchmarkSolution bs = agent_benchmark(problem);
    if (ps.degenerate || bs.posterior.degenerate_at(problem.prior)) {
        rep.vacuous = true;
        rep.pass = true;
        return rep;
    }
    if (problem.n_states() == 2) {
        auto span = [](const PosteriorDistribution& pi) {
            double lo = 1.0, hi = 0.0;
            for (const auto& a : pi.atoms) {
                lo = std::min(lo, a.belief[1]);
                hi = std::max(hi, a.belief[1]);
            }
            return std::make_pair(lo, hi);
        };
        const auto [plo, phi] = span(ps.pi_star);
        const auto [alo, ahi] = span(bs.posterior);
        rep.principal_lo = plo;
        rep.principal_hi = phi;
        rep.agent_lo = alo;
        rep.agent_hi = ahi;
        rep.margin_lo = alo - plo;
        rep.margin_hi = phi - ahi;
        rep.pass = rep.margin_lo > 1e-8 && rep.margin_hi > 1e-8;
        return rep;
    }
    // General state count: each principal atom must fall outside the convex
    // hull of the agent support (LP infeasibility check).
    rep.pass = true;
    for (const auto& atom : ps.pi_star.atoms) {
        bool outside = false;
        try {
            (void)restricted_value(problem, atom.belief, bs.posterior);
        } catch (const input_error&) {
            outside = true;
        }
        if (!outside) rep.pass = false;
    }
    return rep;
}

std::vector<SweepRow> sweep_prior(const DecisionProblem& problem_template,
                                  const std::vector<double>& priors) {
    if (problem_template.n_states() != 2)
        throw capability_error("sweep_prior: binary-state problems only");
    std::vector<SweepRow> rows;
    rows.reserve(priors.size());
    for (const double q0 : priors) {
        if (!(q0 > 0.0 && q0 < 1.0)) throw input_error("sweep_prior: prior must be interior");
        DecisionProblem p(problem_template.states, problem_template.actions,
                          problem_template.utility, Belief({1.0 - q0, q0}), problem_template.kappa,
                          problem_template.chi, problem_template.rho, problem_template.entropy);
        SweepRow row;
        row.prior = q0;
        const BenchmarkSolution bs = agent_benchmark(p);
        row.benchmark_value = bs.value;
        double alo = q0, ahi = q0;
        double agent_gap = 0.0;
        if (!bs.posterior.degenerate_at(p.prior)) {
            alo = 1.0;
            ahi = 0.0;
            for (const auto& a : bs.posterior.atoms) {
                alo = std::min(alo, a.belief[1]);
                ahi = std::max(ahi, a.belief[1]);
            }
            agent_gap = expected_entropy_gap(p, bs.posterior, p.prior);
        }
        row.agent_lo = alo;
        row.agent_hi = ahi;
        row.agent_engagement = p.rho * agent_gap;

        const PrincipalSolution ps = solve_principal(p);
        row.degenerate = ps.degenerate;
        double plo = q0, phi = q0;
        if (!ps.degenerate) {
            plo = 1.0;
            phi = 0.0;
            for (const auto& a : ps.pi_star.atoms) {
                plo = std::min(plo, a.belief[1]);
                phi = std::max(phi, a.belief[1]);
            }
        }
        row.principal_lo = plo;
        row.principal_hi = phi;
        row.principal_engagement = ps.engagement;
        row.engagement_value = ps.engagement;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace engagemax
