#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/separability.hpp"

using namespace valdyn;
using testsupport::absorbing_chain;
using testsupport::dyadic_vector;
using testsupport::random_dyadic_mdp;
using testsupport::stay_or_swap;

TEST_CASE("TabularMdp rejects malformed inputs", "[mdp]") {
    CHECK_THROWS_AS(TabularMdp(2, 1, {1, 2}, {0.0, 0.0}, 0.5), ValidationError);
    CHECK_THROWS_AS(TabularMdp(2, 1, {1, -1}, {0.0, 0.0}, 0.5), ValidationError);
    CHECK_THROWS_AS(TabularMdp(2, 1, {1, 1}, {0.0, std::nan("")}, 0.5), ValidationError);
    CHECK_THROWS_AS(TabularMdp(2, 1, {1, 1}, {0.0, 0.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(TabularMdp(2, 1, {1, 1}, {0.0, 0.0}, -0.1), ValidationError);
    CHECK_THROWS_AS(TabularMdp(0, 1, {}, {}, 0.5), ValidationError);
    CHECK_THROWS_AS(TabularMdp(2, 1, {1}, {0.0}, 0.5), ValidationError);
}

TEST_CASE("ValueTable validates entries and certificate", "[mdp]") {
    CHECK_THROWS_AS(ValueTable(1, 1, {std::nan("")}), ValidationError);
    CHECK_THROWS_AS(ValueTable(1, 1, {0.0}, -1e-9), ValidationError);
    CHECK_THROWS_AS(ValueTable(1, 2, {0.0}), ValidationError);
    ValueTable z = ValueTable::zeros(3, 2);
    CHECK(z.q().size() == 6);
    CHECK_FALSE(z.certified_epsilon().has_value());
    CHECK(z.certified_or(0.25) == 0.25);
    CHECK(z.source() == ValueSource::solved);
}

TEST_CASE("Policy rows must be distributions", "[mdp]") {
    CHECK_THROWS_AS(Policy(1, 2, {0.6, 0.6}), ValidationError);
    CHECK_THROWS_AS(Policy(1, 2, {1.2, -0.2}), ValidationError);
    Policy u = Policy::uniform(2, 4);
    CHECK(u.prob(1, 3) == 0.25);
}

TEST_CASE("value source names round-trip", "[mdp]") {
    for (ValueSource s : {ValueSource::solved, ValueSource::perturbed, ValueSource::loaded})
        CHECK(value_source_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(value_source_from_string("other"), ValidationError);
}

TEST_CASE("greedy and policy state values on a hand example", "[mdp]") {
    ValueTable q(2, 2, {1.0, 3.0, 2.0, 0.0});
    CHECK(greedy_state_values(q) == std::vector<double>{3.0, 2.0});
    CHECK(policy_state_values(q, Policy::uniform(2, 2)) == std::vector<double>{2.0, 1.0});
}

TEST_CASE("optimality backup matches hand computation", "[mdp]") {
    TabularMdp mdp = stay_or_swap();
    ValueTable q(2, 2, {1.0, 2.0, 3.0, 4.0});
    ValueTable tq = bellman_optimality_backup(mdp, q);
    CHECK(tq.q() == std::vector<double>{1.0, 3.0, 2.0, 2.0});
    CHECK_FALSE(tq.certified_epsilon().has_value());
}

TEST_CASE("backups are gamma-contractions, exactly", "[mdp][property]") {
    Rng rng(501);
    for (int trial = 0; trial < 300; ++trial) {
        TabularMdp mdp = random_dyadic_mdp(rng);
        std::size_t n = mdp.rewards().size();
        ValueTable q1(mdp.num_states(), mdp.num_actions(), dyadic_vector(rng, n, 16.0));
        ValueTable q2(mdp.num_states(), mdp.num_actions(), dyadic_vector(rng, n, 16.0));
        ValueTable t1 = bellman_optimality_backup(mdp, q1);
        ValueTable t2 = bellman_optimality_backup(mdp, q2);
        double lhs = 0.0, dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lhs = std::max(lhs, std::abs(t1.q()[i] - t2.q()[i]));
            dist = std::max(dist, std::abs(q1.q()[i] - q2.q()[i]));
        }
        CAPTURE(trial, mdp.gamma(), lhs, dist);
        REQUIRE(lhs <= mdp.gamma() * dist);
    }
}

TEST_CASE("policy backup is also a gamma-contraction", "[mdp][property]") {
    Rng rng(502);
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_dyadic_mdp(rng);
        Policy pi = Policy::uniform(mdp.num_states(), mdp.num_actions());
        std::size_t n = mdp.rewards().size();
        ValueTable q1(mdp.num_states(), mdp.num_actions(), dyadic_vector(rng, n, 16.0));
        ValueTable q2(mdp.num_states(), mdp.num_actions(), dyadic_vector(rng, n, 16.0));
        ValueTable t1 = bellman_policy_backup(mdp, pi, q1);
        ValueTable t2 = bellman_policy_backup(mdp, pi, q2);
        double lhs = 0.0, dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lhs = std::max(lhs, std::abs(t1.q()[i] - t2.q()[i]));
            dist = std::max(dist, std::abs(q1.q()[i] - q2.q()[i]));
        }
        // Uniform mixing weights are 1/A; with A in {1, 2, 4} the expectation
        // is still exact dyadic arithmetic, but A = 3 or 5 rounds, so allow
        // one part in 2^40 of slack.
        REQUIRE(lhs <= mdp.gamma() * dist * (1.0 + 0x1.0p-40) + 0x1.0p-40);
    }
}

TEST_CASE("value iteration reaches the closed-form fixed point", "[mdp]") {
    SolveResult solved = value_iteration(absorbing_chain(), 1e-10);
    REQUIRE(solved.report.certified_epsilon <= 1e-10);
    CHECK(std::abs(solved.table.q()[0] - 1.0) <= solved.report.certified_epsilon);
    CHECK(std::abs(solved.table.q()[1] - 2.0) <= solved.report.certified_epsilon);
    CHECK(solved.table.certified_epsilon() == solved.report.certified_epsilon);
    CHECK(solved.table.source() == ValueSource::solved);
    CHECK(solved.report.iterations > 0);

    SolveResult optimal = value_iteration(stay_or_swap(), 1e-10);
    CHECK(std::abs(optimal.table.q()[0] - 1.0) <= 1e-10);
    CHECK(std::abs(optimal.table.q()[1] - 2.0) <= 1e-10);
    CHECK(std::abs(optimal.table.q()[2] - 1.0) <= 1e-10);
    CHECK(std::abs(optimal.table.q()[3] - 2.0) <= 1e-10);
}

TEST_CASE("policy evaluation matches the closed-form uniform-policy values", "[mdp]") {
    SolveResult solved = value_iteration(stay_or_swap(), Policy::uniform(2, 2), 1e-10);
    double c = solved.report.certified_epsilon;
    CHECK(std::abs(solved.table.q()[0] - 0.5) <= c);
    CHECK(std::abs(solved.table.q()[1] - 1.5) <= c);
    CHECK(std::abs(solved.table.q()[2] - 0.5) <= c);
    CHECK(std::abs(solved.table.q()[3] - 1.5) <= c);
}

TEST_CASE("certificates bound the distance to a near-exact solve", "[mdp][property]") {
    Rng rng(503);
    for (int trial = 0; trial < 40; ++trial) {
        TabularMdp mdp = random_dyadic_mdp(rng, 10, 3);
        SolveResult coarse = value_iteration(mdp, 1e-6);
        SolveResult fine = value_iteration(mdp, 1e-13);
        REQUIRE(coarse.report.certified_epsilon <= 1e-6);
        for (std::size_t i = 0; i < coarse.table.q().size(); ++i) {
            double gap = std::abs(coarse.table.q()[i] - fine.table.q()[i]);
            REQUIRE(gap <= coarse.report.certified_epsilon + fine.report.certified_epsilon);
        }
    }
}

TEST_CASE("the certificate formula matches the reported residual", "[mdp]") {
    TabularMdp mdp = stay_or_swap();
    SolveResult solved = value_iteration(mdp, 1e-8);
    CHECK(solved.report.certified_epsilon ==
          mdp.gamma() * solved.report.final_residual / (1.0 - mdp.gamma()));
}

TEST_CASE("an unreachable target raises ConvergenceError with diagnostics", "[mdp]") {
    try {
        value_iteration(absorbing_chain(), 1e-10, 3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations == 3);
        CHECK(e.final_residual > 0.0);
    }
    CHECK_THROWS_AS(value_iteration(absorbing_chain(), 0.0), ValidationError);
    CHECK_THROWS_AS(value_iteration(absorbing_chain(), -1.0), ValidationError);
}

TEST_CASE("uniform perturbation stays inside the box and updates metadata", "[mdp][property]") {
    Rng rng(504);
    for (int trial = 0; trial < 100; ++trial) {
        TabularMdp mdp = random_dyadic_mdp(rng);
        SolveResult solved = value_iteration(mdp, 1e-9);
        double eps = 0.125;
        ValueTable noisy = perturb_values(solved.table, eps, PerturbMode::uniform,
                                          mix_seed(77, static_cast<std::uint64_t>(trial), 0));
        for (std::size_t i = 0; i < noisy.q().size(); ++i)
            REQUIRE(std::abs(noisy.q()[i] - solved.table.q()[i]) <= eps);
        REQUIRE(noisy.source() == ValueSource::perturbed);
        REQUIRE(noisy.certified_epsilon().has_value());
        REQUIRE(*noisy.certified_epsilon() == *solved.table.certified_epsilon() + eps);
    }
}

TEST_CASE("perturbing an uncertified table leaves the certificate unset", "[mdp]") {
    ValueTable q(2, 1, {0.0, 1.0});
    ValueTable noisy = perturb_values(q, 0.1, PerturbMode::uniform, 9);
    CHECK_FALSE(noisy.certified_epsilon().has_value());
    CHECK(noisy.source() == ValueSource::perturbed);
}

TEST_CASE("adversarial perturbation closes the minimum gap to exactly delta - 2 eps",
          "[mdp]") {
    // One action per state, values on a dyadic grid: gap arithmetic is exact.
    double delta = 0x1.0p-6, eps = 0x1.0p-9;
    ValueTable q(4, 1, {0.0, delta, 1.0, 2.0});
    ValueTable noisy = perturb_values(q, eps, PerturbMode::adversarial_pair, 1);
    std::vector<double> v = greedy_state_values(noisy);
    CHECK(value_gap(v).delta == delta - 2.0 * eps);
    CHECK(noisy.q()[0] == eps);         // lower endpoint moved up
    CHECK(noisy.q()[1] == delta - eps); // higher endpoint moved down
    CHECK(noisy.q()[2] == 1.0);
    CHECK(noisy.q()[3] == 2.0);
}

TEST_CASE("perturbation validates epsilon", "[mdp]") {
    ValueTable q(2, 1, {0.0, 1.0});
    CHECK_THROWS_AS(perturb_values(q, -0.1, PerturbMode::uniform, 1), ValidationError);
    ValueTable same = perturb_values(q, 0.0, PerturbMode::uniform, 1);
    CHECK(same.q() == q.q());
}
