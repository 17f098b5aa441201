#include <doctest.h>

#include <cmath>

#include "engagemax/rng.hpp"
#include "engagemax/static_ri.hpp"
#include "oracles.hpp"

using namespace engagemax;

namespace {

const double kE = std::exp(1.0);

DecisionProblem unit_problem(double prior_upper) {
    return binary_match_problem(prior_upper, 2.0, 1.0, 1.0);
}

// phi(q) = u_hat(q) - c (H(q) - H(prior)) for the grid oracle.
std::function<double(double)> phi_of(const DecisionProblem& p, double c) {
    const double h0 = p.entropy.value(p.prior);
    return [&p, c, h0](double q) {
        const Belief b({1.0 - q, q});
        return u_hat(p, b).value - c * (p.entropy.value(b) - h0);
    };
}

double upper_atom(const PosteriorDistribution& pi) {
    double hi = 0.0;
    for (const auto& a : pi.atoms) hi = std::max(hi, a.belief[1]);
    return hi;
}

double lower_atom(const PosteriorDistribution& pi) {
    double lo = 1.0;
    for (const auto& a : pi.atoms) lo = std::min(lo, a.belief[1]);
    return lo;
}

}  // namespace

TEST_SUITE("static_ri") {

TEST_CASE("unit problem at cost 2 recovers the logit pair") {
    const auto pi = solve_static_ri(unit_problem(0.5), 2.0);
    REQUIRE(pi.atoms.size() == 2);
    CHECK(lower_atom(pi) == doctest::Approx(1.0 / (1.0 + kE)).epsilon(1e-11));
    CHECK(upper_atom(pi) == doctest::Approx(kE / (1.0 + kE)).epsilon(1e-11));
    CHECK(pi.atoms[0].weight == doctest::Approx(0.5).epsilon(1e-11));
    pi.validate(Belief::uniform(2));
}

TEST_CASE("cost 10 at the uniform prior still buys a little information") {
    // The payoff kink at the prior makes some information worthwhile at any
    // finite cost; the grid oracle confirms the two-atom solution.
    const DecisionProblem p = unit_problem(0.5);
    const auto oracle_env = oracle::grid_concavify(phi_of(p, 10.0), 0.5);
    CHECK(oracle_env.informative);

    const auto res = solve_static_ri_detailed(p, 10.0);
    REQUIRE(res.posterior.atoms.size() == 2);
    CHECK(res.value == doctest::Approx(oracle_env.value).epsilon(1e-6));
    // Logit positions sigma(+-2/10).
    const double q10 = 1.0 / (1.0 + std::exp(-0.2));
    CHECK(upper_atom(res.posterior) == doctest::Approx(q10).epsilon(1e-10));
    CHECK(res.value > u_hat(p, p.prior).value);
}

TEST_CASE("cost 10 away from the kink is degenerate") {
    const DecisionProblem p = unit_problem(0.3);
    const auto pi = solve_static_ri(p, 10.0);
    CHECK(pi.degenerate_at(p.prior));
    const auto oracle_env = oracle::grid_concavify(phi_of(p, 10.0), 0.3);
    CHECK_FALSE(oracle_env.informative);
}

TEST_CASE("logit map inversion pins the atoms") {
    const double q = 0.92553;
    const double c = 2.0 / std::log(q / (1.0 - q));
    const auto pi = solve_static_ri(unit_problem(0.5), c);
    REQUIRE(pi.atoms.size() == 2);
    CHECK(upper_atom(pi) == doctest::Approx(q).epsilon(1e-10));
    CHECK(lower_atom(pi) == doctest::Approx(1.0 - q).epsilon(1e-10));
    const auto oracle_env = oracle::grid_concavify(phi_of(unit_problem(0.5), c), 0.5);
    CHECK(oracle_env.informative);
    CHECK(std::abs(oracle_env.hi - q) < 1e-4);  // grid resolution
}

TEST_CASE("value matches the grid concavification oracle") {
    for (const double prior : {0.35, 0.5, 0.62}) {
        for (const double c : {0.8, 1.3, 2.0, 3.0}) {
            const DecisionProblem p = unit_problem(prior);
            const auto res = solve_static_ri_detailed(p, c);
            const auto env = oracle::grid_concavify(phi_of(p, c), prior);
            CAPTURE(prior);
            CAPTURE(c);
            CHECK(res.value == doctest::Approx(env.value).epsilon(1e-6));
        }
    }
}

TEST_CASE("locally invariant posteriors across interior priors") {
    const auto ref = solve_static_ri(unit_problem(0.5), 2.0);
    for (const double prior : {0.3, 0.4, 0.55, 0.7}) {
        const auto pi = solve_static_ri(unit_problem(prior), 2.0);
        REQUIRE(pi.atoms.size() == 2);
        CHECK(std::abs(lower_atom(pi) - lower_atom(ref)) < 1e-6);
        CHECK(std::abs(upper_atom(pi) - upper_atom(ref)) < 1e-6);
        pi.validate(Belief({1.0 - prior, prior}));
    }
}

TEST_CASE("returned distribution always weakly beats staying put") {
    Xoshiro256pp rng(7);
    for (int k = 0; k < 25; ++k) {
        const double prior = 0.05 + 0.9 * rng.uniform01();
        const double c = 0.3 + 5.0 * rng.uniform01();
        const DecisionProblem p = unit_problem(prior);
        const auto res = solve_static_ri_detailed(p, c);
        CHECK(res.value >= u_hat(p, p.prior).value - 1e-12);
    }
}

TEST_CASE("asymmetric payoffs keep the barycenter at the prior") {
    const DecisionProblem p({"L", "R"}, {"l", "r", "m"},
                            {{1.4, -1.0}, {-0.8, 1.1}, {0.25, 0.2}}, Belief({0.45, 0.55}), 2.0,
                            1.0, 1.0);
    const auto res = solve_static_ri_detailed(p, 0.9);
    res.posterior.validate(p.prior);
    const auto env = oracle::grid_concavify(
        [&p](double q) {
            const Belief b({1.0 - q, q});
            return u_hat(p, b).value - 0.9 * (p.entropy.value(b) - p.entropy.value(p.prior));
        },
        0.55);
    CHECK(res.value == doctest::Approx(env.value).epsilon(1e-6));
}

TEST_CASE("four-state problems solve through the same fixed point") {
    const DecisionProblem p({"a", "b", "c", "d"}, {"x", "y"},
                            {{1, -1, 1, -1}, {-1, 1, -1, 1}}, Belief::uniform(4), 2.0, 1.0, 1.0);
    const auto res = solve_static_ri_detailed(p, 2.0);
    REQUIRE(res.posterior.atoms.size() == 2);
    // Product structure: the irrelevant pair stays at one half.
    for (const auto& atom : res.posterior.atoms) {
        CHECK(atom.belief[0] + atom.belief[1] == doctest::Approx(0.5).epsilon(1e-10));
        const double relevant = atom.belief[0] + atom.belief[2];
        const double expect = relevant > 0.5 ? kE / (1.0 + kE) : 1.0 / (1.0 + kE);
        CHECK(relevant == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("custom binary entropy goes through the concavifier") {
    const EntropyModel quad = EntropyModel::custom_model(
        [](const Belief& q) {
            double s = 0.0;
            for (double v : q.probs()) s += v * v;
            return s;
        },
        [](const Belief& q) {
            std::vector<double> g(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) g[i] = 2.0 * q[i];
            return g;
        });
    const DecisionProblem p({"L", "R"}, {"l", "r"}, {{1.0, -1.0}, {-1.0, 1.0}},
                            Belief::uniform(2), 2.0, 1.0, 1.0, quad);
    const auto res = solve_static_ri_detailed(p, 0.7);
    REQUIRE(res.posterior.atoms.size() == 2);
    const auto env = oracle::grid_concavify(
        [&p](double q) {
            const Belief b({1.0 - q, q});
            return u_hat(p, b).value - 0.7 * (p.entropy.value(b) - p.entropy.value(p.prior));
        },
        0.5);
    CHECK(res.value == doctest::Approx(env.value).epsilon(1e-6));
    CHECK(std::abs(upper_atom(res.posterior) - env.hi) < 1e-4);

    const DecisionProblem p3({"a", "b", "c"}, {"x", "y"}, {{1, 0, 0}, {0, 1, 0}},
                             Belief::uniform(3), 1.0, 1.0, 1.0, quad);
    CHECK_THROWS_AS(solve_static_ri(p3, 1.0), capability_error);
}

TEST_CASE("cost scale must be positive") {
    CHECK_THROWS_AS(solve_static_ri(unit_problem(0.5), 0.0), input_error);
    CHECK_THROWS_AS(solve_static_ri(unit_problem(0.5), -1.0), input_error);
}

TEST_CASE("agent benchmark at the uniform prior") {
    const BenchmarkSolution b = agent_benchmark(unit_problem(0.5));
    // (e-1)/(1+e) - 2 (ln2 - Hb(e/(1+e)))
    const double vb = (kE - 1.0) / (1.0 + kE) -
                      2.0 * (std::log(2.0) - oracle::binary_entropy(kE / (1.0 + kE)));
    CHECK(b.value == doctest::Approx(vb).epsilon(1e-11));
    CHECK(b.value == doctest::Approx(0.2402290139).epsilon(1e-9));
    CHECK(b.continuation);
    REQUIRE(b.boundaries.has_value());
    CHECK(b.boundaries->first == doctest::Approx(1.0 / (1.0 + kE)).epsilon(1e-8));
    CHECK(b.boundaries->second == doctest::Approx(kE / (1.0 + kE)).epsilon(1e-8));
    CHECK(b.boundaries->first == doctest::Approx(1.0 - b.boundaries->second).epsilon(1e-8));
}

TEST_CASE("agent benchmark outside the continuation region") {
    const DecisionProblem p = unit_problem(0.95);
    const BenchmarkSolution b = agent_benchmark(p);
    CHECK_FALSE(b.continuation);
    CHECK(b.value == doctest::Approx(u_hat(p, p.prior).value).epsilon(1e-12));
    CHECK(b.posterior.degenerate_at(p.prior));
    REQUIRE(b.boundaries.has_value());
    CHECK(0.95 > b.boundaries->second);
}

TEST_CASE("agent benchmark at a continuation boundary") {
    const double edge = kE / (1.0 + kE);
    const DecisionProblem p = unit_problem(edge);
    const BenchmarkSolution b = agent_benchmark(p);
    CHECK(b.value == doctest::Approx(u_hat(p, p.prior).value).epsilon(1e-9));
    CHECK_FALSE(b.continuation);
}

TEST_CASE("restricted value: zero at atoms, oracle elsewhere") {
    const DecisionProblem p = unit_problem(0.5);
    // A hand-built four-atom distribution with barycenter 1/2.
    PosteriorDistribution pi;
    pi.atoms = {{Belief({0.9, 0.1}), 0.25},
                {Belief({0.6, 0.4}), 0.25},
                {Belief({0.4, 0.6}), 0.25},
                {Belief({0.1, 0.9}), 0.25}};

    std::vector<double> atom_q, coeff_base;
    for (const auto& a : pi.atoms) {
        atom_q.push_back(a.belief[1]);
        coeff_base.push_back(u_hat(p, a.belief).value - 2.0 * p.entropy.value(a.belief));
    }
    Xoshiro256pp rng(11);
    for (int k = 0; k < 50; ++k) {
        const double q = 0.1 + 0.8 * rng.uniform01();
        const Belief qb({1.0 - q, q});
        std::vector<double> coeff(coeff_base);
        for (auto& c : coeff)
            c -= u_hat(p, qb).value - 2.0 * p.entropy.value(qb);
        const double lp = restricted_value(p, qb, pi);
        const double brute = oracle::restricted_value_enumerate(atom_q, coeff, q);
        CHECK(lp == doctest::Approx(brute).epsilon(1e-9).scale(1.0));
    }
    // At an atom the degenerate mixture is feasible, so the value is >= 0;
    // here information still helps strictly at the interior atoms.
    CHECK(restricted_value(p, Belief({0.6, 0.4}), pi) >= -1e-12);
    // Outside the hull.
    CHECK_THROWS_AS(restricted_value(p, Belief({0.95, 0.05}), pi), input_error);
}

TEST_CASE("restricted value ties out against the agent benchmark") {
    const DecisionProblem p = unit_problem(0.5);
    const BenchmarkSolution b = agent_benchmark(p);
    const double vr = restricted_value(p, p.prior, b.posterior);
    CHECK(vr == doctest::Approx(b.value - u_hat(p, p.prior).value).epsilon(1e-8));
    CHECK(vr == doctest::Approx(0.2402290139).epsilon(1e-7));
}

TEST_CASE("classification of decisive, suspensive and stop beliefs") {
    const DecisionProblem p = unit_problem(0.5);
    // Use the binding two-atom stopping distribution for the classification
    // examples; its net value at the prior is exactly zero.
    const double qs = oracle::principal_qstar(2.0);
    PosteriorDistribution pi;
    pi.atoms = {{Belief({qs, 1.0 - qs}), 0.5}, {Belief({1.0 - qs, qs}), 0.5}};

    CHECK(classify_belief(p, pi.atoms[0].belief, pi) == BeliefClass::Decisive);
    CHECK(classify_belief(p, p.prior, pi) == BeliefClass::Suspensive);
    // Unique suspensive belief: nearby interior beliefs already stop.
    CHECK(classify_belief(p, Belief({0.45, 0.55}), pi) == BeliefClass::Stop);
    CHECK(classify_belief(p, Belief({0.55, 0.45}), pi) == BeliefClass::Stop);
    // Outside the convex hull of the support.
    CHECK(classify_belief(p, Belief({0.01, 0.99}), pi) == BeliefClass::Stop);
}

TEST_CASE("asymmetric prior makes a whole interval suspensive") {
    const double q0 = 0.4;
    const DecisionProblem p = unit_problem(q0);
    const double qs = oracle::bisect(
        [](double q) {
            return (q + oracle::binary_entropy(q)) -
                   (0.6 + oracle::binary_entropy(0.6));
        },
        kE / (1.0 + kE) + 1e-12, 1.0 - 1e-12);
    const double w = (q0 - (1.0 - qs)) / (2.0 * qs - 1.0);
    PosteriorDistribution pi;
    pi.atoms = {{Belief({qs, 1.0 - qs}), 1.0 - w}, {Belief({1.0 - qs, qs}), w}};
    pi.validate(p.prior);

    for (double q = 0.40; q <= 0.601; q += 0.02)
        CHECK(classify_belief(p, Belief({1.0 - q, q}), pi) == BeliefClass::Suspensive);
    CHECK(classify_belief(p, Belief({0.62, 0.38}), pi) == BeliefClass::Stop);
    CHECK(classify_belief(p, Belief({0.38, 0.62}), pi) == BeliefClass::Stop);
}

TEST_CASE("restricted value is nonnegative at the prior for feasible pi") {
    // Any two-atom distribution satisfying the relaxed constraint at the
    // prior yields a nonnegative restricted value there.
    const DecisionProblem p = unit_problem(0.5);
    Xoshiro256pp rng(23);
    int checked = 0;
    for (int k = 0; k < 40; ++k) {
        const double hi = 0.7 + 0.29 * rng.uniform01();
        PosteriorDistribution pi;
        pi.atoms = {{Belief({hi, 1.0 - hi}), 0.5}, {Belief({1.0 - hi, hi}), 0.5}};
        const double slack =
            (expected_u_hat(p, pi) - u_hat(p, p.prior).value) -
            p.cost_ratio() * expected_entropy_gap(p, pi, p.prior);
        if (slack < 0.0) continue;
        ++checked;
        CHECK(restricted_value(p, p.prior, pi) >= -1e-10);
    }
    CHECK(checked > 5);
}

}  // TEST_SUITE
