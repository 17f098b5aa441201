#include <doctest.h>

#include <cmath>

#include "engagemax/beliefs.hpp"
#include "engagemax/rng.hpp"
#include "oracles.hpp"

using namespace engagemax;

TEST_SUITE("beliefs") {

TEST_CASE("belief validation") {
    CHECK_THROWS_AS(Belief({0.5, 0.6}), input_error);
    CHECK_THROWS_AS(Belief({-0.1, 1.1}), input_error);
    CHECK_THROWS_AS(Belief({}), input_error);
    CHECK_NOTHROW(Belief({0.5, 0.5}));
    CHECK_NOTHROW(Belief({1.0, 0.0}));
    // within the 1e-12 sum tolerance
    CHECK_NOTHROW(Belief({0.5, 0.5 + 5e-13}));
}

TEST_CASE("u_hat examples") {
    const DecisionProblem p = binary_match_problem(0.5, 2.0, 1.0, 1.0);

    const auto mid = u_hat(p, Belief::uniform(2));
    CHECK(mid.value == 0.0);
    CHECK(mid.best_actions.size() == 2);  // both actions maximal at the kink
    CHECK(mid.best == 0);                 // lowest index reported

    const double e = std::exp(1.0);
    const auto logit = u_hat(p, Belief({1.0 / (1.0 + e), e / (1.0 + e)}));
    CHECK(logit.value == doctest::Approx(2.0 * e / (1.0 + e) - 1.0).epsilon(1e-14));
    CHECK(logit.value == doctest::Approx(0.46211715726).epsilon(1e-9));

    const auto vertex = u_hat(p, Belief::vertex(2, 0));
    CHECK(vertex.value == doctest::Approx(1.0));
    CHECK(vertex.best == 0);

    CHECK_THROWS_AS(u_hat(p, Belief::uniform(3)), input_error);
}

TEST_CASE("u_hat is convex on random mixtures") {
    const DecisionProblem p({"a", "b", "c"}, {"x", "y"},
                            {{1.0, -0.5, 0.2}, {-1.0, 2.0, 0.0}}, Belief::uniform(3), 1.0, 1.0,
                            1.0);
    Xoshiro256pp rng(99);
    for (int k = 0; k < 200; ++k) {
        auto draw = [&]() {
            double a = rng.uniform01(), b = rng.uniform01(), c = rng.uniform01();
            const double s = a + b + c;
            return Belief({a / s, b / s, c / s});
        };
        const Belief q1 = draw(), q2 = draw();
        const double t = rng.uniform01();
        std::vector<double> mix(3);
        for (int i = 0; i < 3; ++i) mix[i] = t * q1[i] + (1.0 - t) * q2[i];
        const double lhs = u_hat(p, Belief(mix)).value;
        const double rhs = t * u_hat(p, q1).value + (1.0 - t) * u_hat(p, q2).value;
        CHECK(lhs <= rhs + 1e-12);
    }
}

TEST_CASE("entropy gap examples") {
    const EntropyModel m = EntropyModel::shannon();
    const Belief half = Belief::uniform(2);
    CHECK(entropy_gap(m, half, half) == 0.0);

    const double e = std::exp(1.0);
    const Belief qa({e / (1.0 + e), 1.0 / (1.0 + e)});
    const double gap_a = entropy_gap(m, qa, half);
    CHECK(gap_a == doctest::Approx(std::log(2.0) - oracle::binary_entropy(e / (1.0 + e)))
                       .epsilon(1e-14));
    CHECK(gap_a == doctest::Approx(0.1109440716717).epsilon(1e-10));

    const Belief qb({4.0 * e / (1.0 + 4.0 * e), 1.0 / (1.0 + 4.0 * e)});
    const double gap_b = entropy_gap(m, qb, half);
    CHECK(gap_b == doctest::Approx(0.4041811050234).epsilon(1e-10));

    // The gap can be negative when moving toward the uniform belief.
    CHECK(entropy_gap(m, half, qa) < 0.0);
}

TEST_CASE("shannon model passes convexity and gradient checks") {
    const auto rep = check_entropy_model(EntropyModel::shannon(), 3);
    CHECK(rep.convex);
    CHECK(rep.gradient_ok);
    CHECK(rep.worst_convexity_violation < 1e-10);
    CHECK(rep.worst_gradient_rel_error < 1e-6);
}

TEST_CASE("custom quadratic entropy model") {
    const EntropyModel quad = EntropyModel::custom_model(
        [](const Belief& q) {
            double s = 0.0;
            for (double p : q.probs()) s += p * p;
            return s;
        },
        [](const Belief& q) {
            std::vector<double> g(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) g[i] = 2.0 * q[i];
            return g;
        });
    const auto rep = check_entropy_model(quad, 2);
    CHECK(rep.convex);
    CHECK(rep.gradient_ok);
}

TEST_CASE("shannon gradient rejects boundary beliefs") {
    CHECK_THROWS_AS(EntropyModel::shannon().gradient(Belief({1.0, 0.0})), input_error);
}

TEST_CASE("decision problem validation") {
    CHECK_THROWS_AS(binary_match_problem(0.5, -1.0, 1.0, 1.0), input_error);
    CHECK_THROWS_AS(binary_match_problem(0.5, 1.0, 0.0, 1.0), input_error);
    CHECK_THROWS_AS(binary_match_problem(0.5, 1.0, 1.0, -2.0), input_error);
    CHECK_THROWS_AS(DecisionProblem({"a"}, {"x", "y"}, {{1.0}, {0.0}}, Belief({1.0}), 1, 1, 1),
                    input_error);
    CHECK_THROWS_AS(DecisionProblem({"a", "b"}, {"x", "y"}, {{1.0, 0.0}}, Belief::uniform(2), 1,
                                    1, 1),
                    input_error);
}

TEST_CASE("rotation validation and application") {
    CHECK_NOTHROW(Rotation::swap_binary());
    // Not an order-2 rotation.
    CHECK_THROWS_AS(Rotation({{0.9, 0.1}, {0.1, 0.9}}, 2), input_error);
    // Column sums off.
    CHECK_THROWS_AS(Rotation({{0.5, 1.0}, {0.1, 0.0}}, 2), input_error);

    const Rotation swap = Rotation::swap_binary();
    const Belief q({0.3, 0.7});
    const Belief rq = swap.apply(q);
    CHECK(rq[0] == doctest::Approx(0.7));
    CHECK(rq[1] == doctest::Approx(0.3));

    // Cyclic shift on three states has order 3.
    CHECK_NOTHROW(Rotation({{0, 0, 1}, {1, 0, 0}, {0, 1, 0}}, 3));
}

TEST_CASE("rotational symmetry checks") {
    const DecisionProblem sym = binary_match_problem(0.5, 2.0, 1.0, 1.0);
    const auto rep = check_rotational_symmetry(EntropyModel::shannon(), sym,
                                               Rotation::swap_binary());
    CHECK(rep.symmetric);
    CHECK(rep.max_entropy_dev < 1e-9);
    CHECK(rep.max_payoff_dev < 1e-9);

    const DecisionProblem asym({"L", "R"}, {"l", "r"}, {{2.0, -1.0}, {-1.0, 1.0}},
                               Belief::uniform(2), 2.0, 1.0, 1.0);
    const auto rep2 = check_rotational_symmetry(EntropyModel::shannon(), asym,
                                                Rotation::swap_binary());
    CHECK_FALSE(rep2.symmetric);
    // The payoff map is what breaks: u_hat(0.9, 0.1) differs from the swap.
    const Belief q({0.9, 0.1});
    CHECK(std::abs(u_hat(asym, q).value - u_hat(asym, Rotation::swap_binary().apply(q)).value) >
          1e-3);

    CHECK_THROWS_AS(check_rotational_symmetry(
                        EntropyModel::shannon(),
                        DecisionProblem({"a", "b", "c"}, {"x", "y"},
                                        {{1, 0, 0}, {0, 1, 0}}, Belief::uniform(3), 1, 1, 1),
                        Rotation::swap_binary()),
                    input_error);
}

}  // TEST_SUITE
