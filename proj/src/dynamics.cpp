#include "engagemax/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace engagemax {

namespace {

std::size_t draw_atom(const PosteriorDistribution& pi, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pi.atoms.size(); ++i) {
        acc += pi.atoms[i].weight;
        if (u <= acc) return i;
    }
    return pi.atoms.size() - 1;
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_and_se(const std::vector<double>& xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    const double mean = s.value() / static_cast<double>(xs.size());
    KahanSum var;
    for (double x : xs) var.add((x - mean) * (x - mean));
    const double v = var.value() / (static_cast<double>(xs.size()) - 1.0);
    return {mean, std::sqrt(v / static_cast<double>(xs.size()))};
}

}  // namespace

PathEnsemble sample_dilution(const PosteriorDistribution& pi, double alpha, std::size_t n,
                             std::uint64_t seed, double chi) {
    if (!(alpha > 0.0)) throw input_error("sample_dilution: alpha must be positive");
    if (!(chi > 0.0)) throw input_error("sample_dilution: chi must be positive");
    if (n == 0) throw input_error("sample_dilution: need at least one path");
    const Belief prior = pi.barycenter();
    if (pi.degenerate_at(prior)) throw input_error("sample_dilution: degenerate distribution");

    PathEnsemble ens{{}, alpha, chi, pi, prior};
    ens.paths.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint64_t path_seed = derive_seed(seed, k);
        Xoshiro256pp rng(path_seed);
        const double tau = -std::log(rng.uniform01()) / alpha;
        const std::size_t atom = draw_atom(pi, rng.uniform01());
        DilutionPath p{tau, pi.atoms[atom].belief, prior, chi * tau, path_seed};
        ens.paths.push_back(std::move(p));
    }
    return ens;
}

void write_paths_csv(const PathEnsemble& ensemble, std::ostream& os,
                     const std::vector<std::string>& state_names) {
    os << "path_id,jump_time";
    for (const auto& s : state_names) os << ",terminal_q_" << s;
    os << ",info_total\n";
    char buf[64];
    for (std::size_t i = 0; i < ensemble.paths.size(); ++i) {
        const auto& p = ensemble.paths[i];
        os << i;
        std::snprintf(buf, sizeof(buf), ",%.12g", p.jump_time);
        os << buf;
        for (std::size_t x = 0; x < p.terminal_belief.size(); ++x) {
            std::snprintf(buf, sizeof(buf), ",%.12g", p.terminal_belief[x]);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.12g", p.info_total);
        os << buf << "\n";
    }
}

FeasibilityReport audit_feasibility(const PathEnsemble& ensemble, const DecisionProblem& problem) {
    if (ensemble.paths.empty()) throw input_error("audit_feasibility: empty ensemble");
    FeasibilityReport rep;
    const std::size_t n = ensemble.paths.size();

    std::vector<double> net(n), taus(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = ensemble.paths[i];
        net[i] = u_hat(problem, p.terminal_belief).value - problem.kappa * p.jump_time;
        taus[i] = p.jump_time;
    }
    const MeanSe net_ms = mean_and_se(net);
    const MeanSe tau_ms = mean_and_se(taus);

    rep.participation_lhs = net_ms.mean;
    rep.participation_rhs = u_hat(problem, ensemble.prior).value;
    rep.participation_se = net_ms.se;
    rep.participation_ok = net_ms.mean >= rep.participation_rhs - 4.0 * net_ms.se;

    rep.capacity_lhs = expected_entropy_gap(problem, ensemble.pi, ensemble.prior);
    rep.capacity_rhs = problem.chi * tau_ms.mean;
    rep.capacity_se = problem.chi * tau_ms.se;
    rep.capacity_ok = rep.capacity_lhs <= rep.capacity_rhs + 4.0 * rep.capacity_se;

    // Martingale: the cross-path mean of q_t must equal the prior at every
    // probe time (paths sit at the prior until their jump).
    const double horizon = 3.0 / ensemble.alpha;
    rep.martingale_ok = true;
    for (int probe = 1; probe <= 4; ++probe) {
        const double t = horizon * probe / 4.0;
        for (std::size_t x = 0; x < ensemble.prior.size(); ++x) {
            std::vector<double> coord(n);
            for (std::size_t i = 0; i < n; ++i) {
                const auto& p = ensemble.paths[i];
                coord[i] = (p.jump_time <= t) ? p.terminal_belief[x] : ensemble.prior[x];
            }
            const MeanSe ms = mean_and_se(coord);
            const double dev = std::abs(ms.mean - ensemble.prior[x]);
            rep.martingale_max_dev = std::max(rep.martingale_max_dev, dev);
            const double tol = 4.0 * std::max(ms.se, 1e-12);
            rep.martingale_tol = std::max(rep.martingale_tol, tol);
            if (dev > tol) rep.martingale_ok = false;
        }
    }

    rep.pass = rep.participation_ok && rep.capacity_ok && rep.martingale_ok;
    if (!rep.pass) {
        std::ostringstream d;
        d << "participation " << (rep.participation_ok ? "ok" : "FAIL") << ", capacity "
          << (rep.capacity_ok ? "ok" : "FAIL") << ", martingale "
          << (rep.martingale_ok ? "ok" : "FAIL");
        rep.detail = d.str();
    }
    return rep;
}

StoppingReport audit_stopping(const PosteriorDistribution& pi, double alpha,
                              const DecisionProblem& problem,
                              const std::vector<StoppingRule>& deviations, std::size_t n,
                              std::uint64_t seed) {
    const PathEnsemble ens = sample_dilution(pi, alpha, n, seed, problem.chi);
    const double act_now = u_hat(problem, ens.prior).value;

    std::vector<double> rec(n);
    for (std::size_t i = 0; i < n; ++i)
        rec[i] = u_hat(problem, ens.paths[i].terminal_belief).value -
                 problem.kappa * ens.paths[i].jump_time;
    const MeanSe rec_ms = mean_and_se(rec);

    StoppingReport rep;
    rep.recommended_utility = rec_ms.mean;
    rep.recommended_se = rec_ms.se;
    rep.pass = true;
    for (const auto& rule : deviations) {
        StoppingReport::Row row;
        switch (rule.kind) {
            case StoppingRule::Kind::recommended:
                row.name = "recommended";
                row.utility = rec_ms.mean;
                row.se = rec_ms.se;
                break;
            case StoppingRule::Kind::immediate:
                row.name = "immediate";
                row.utility = act_now;  // exactly u_hat(prior), no sampling noise
                row.se = 0.0;
                break;
            case StoppingRule::Kind::fixed_deadline: {
                char nb[64];
                std::snprintf(nb, sizeof(nb), "deadline_%.6g", rule.deadline);
                row.name = nb;
                std::vector<double> util(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& p = ens.paths[i];
                    if (p.jump_time <= rule.deadline)
                        util[i] = u_hat(problem, p.terminal_belief).value -
                                  problem.kappa * p.jump_time;
                    else
                        util[i] = act_now - problem.kappa * rule.deadline;
                }
                const MeanSe ms = mean_and_se(util);
                row.utility = ms.mean;
                row.se = ms.se;
                break;
            }
        }
        const double tol = 4.0 * std::sqrt(row.se * row.se + rec_ms.se * rec_ms.se);
        if (row.utility > rec_ms.mean + tol) rep.pass = false;
        rep.deviations.push_back(row);
    }
    return rep;
}

GarblingReport audit_garbling(const PosteriorDistribution& pi, double alpha,
                              const DecisionProblem& problem, int n_garbles, std::uint64_t seed) {
    const Belief prior = pi.barycenter();
    if (pi.degenerate_at(prior)) throw input_error("audit_garbling: degenerate distribution");
    const double act_now = u_hat(problem, prior).value;
    const double expected_tau = 1.0 / alpha;
    const double delay_cost = problem.kappa * expected_tau;

    const auto value_of = [&](const PosteriorDistribution& contraction) {
        return expected_u_hat(problem, contraction) - delay_cost;
    };

    GarblingReport rep;
    rep.bound = act_now;
    rep.pass = true;
    rep.worst_value = -std::numeric_limits<double>::infinity();

    const auto consider = [&](const PosteriorDistribution& contraction, const std::string& name) {
        const double v = value_of(contraction);
        ++rep.n_checked;
        if (v > rep.worst_value) {
            rep.worst_value = v;
            if (v > act_now + 1e-9) rep.offender = name;
        }
        if (v > act_now + 1e-9) rep.pass = false;
    };

    // Identity (no garbling) and the full contraction to the prior.
    consider(pi, "identity");
    consider(PosteriorDistribution::degenerate(prior), "full-contraction");

    Xoshiro256pp rng(seed);
    const std::size_t m = pi.atoms.size();
    for (int k = 0; k < n_garbles; ++k) {
        if (m >= 2 && k % 2 == 0) {
            // Merge a random pair of atoms at their weighted barycenter.
            std::size_t i = static_cast<std::size_t>(rng.uniform01() * m) % m;
            std::size_t j = static_cast<std::size_t>(rng.uniform01() * m) % m;
            if (i == j) j = (j + 1) % m;
            PosteriorDistribution merged;
            std::vector<double> mix(prior.size(), 0.0);
            const double wi = pi.atoms[i].weight, wj = pi.atoms[j].weight;
            for (std::size_t x = 0; x < prior.size(); ++x)
                mix[x] = (wi * pi.atoms[i].belief[x] + wj * pi.atoms[j].belief[x]) / (wi + wj);
            merged.atoms.push_back({Belief(mix), wi + wj});
            for (std::size_t l = 0; l < m; ++l)
                if (l != i && l != j) merged.atoms.push_back(pi.atoms[l]);
            consider(merged, "merge(" + std::to_string(i) + "," + std::to_string(j) + ")");
        } else {
            // Random stochastic garble: new atom g is the w-weighted blend of
            // old atoms routed to it, so the barycenter is preserved.
            const std::size_t g = std::max<std::size_t>(2, m);
            std::vector<std::vector<double>> route(m, std::vector<double>(g, 0.0));
            for (std::size_t i = 0; i < m; ++i) {
                double rsum = 0.0;
                for (std::size_t j = 0; j < g; ++j) {
                    route[i][j] = -std::log(rng.uniform01());
                    rsum += route[i][j];
                }
                for (auto& v : route[i]) v /= rsum;
            }
            PosteriorDistribution garbled;
            for (std::size_t j = 0; j < g; ++j) {
                double w = 0.0;
                std::vector<double> mix(prior.size(), 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    const double wij = pi.atoms[i].weight * route[i][j];
                    w += wij;
                    for (std::size_t x = 0; x < prior.size(); ++x)
                        mix[x] += wij * pi.atoms[i].belief[x];
                }
                if (w < 1e-14) continue;
                for (auto& v : mix) v /= w;
                garbled.atoms.push_back({Belief(mix), w});
            }
            consider(garbled, "stochastic-garble-" + std::to_string(k));
        }
    }
    return rep;
}

}  // namespace engagemax
