#pragma once

// Generators whose arithmetic is exact in binary64: discounts of the form
// k/64 and values on a 2^-12 grid keep single Bellman backups free of
// rounding, so the inequality checks built on them are exact rather than
// tolerance-based.

#include <cstddef>
#include <vector>

#include "valdyn/mdp.hpp"
#include "valdyn/rng.hpp"

namespace testsupport {

// Multiples of 2^-12 in [-radius, radius]; radius must be a power of two.
inline double dyadic(valdyn::Rng& rng, double radius) {
    int steps = static_cast<int>(radius * 4096.0);
    return static_cast<double>(rng.uniform_int(2 * steps + 1) - steps) * 0x1.0p-12;
}

inline double dyadic_gamma(valdyn::Rng& rng) {
    return static_cast<double>(1 + rng.uniform_int(63)) / 64.0;
}

inline std::vector<double> dyadic_vector(valdyn::Rng& rng, std::size_t n, double radius) {
    std::vector<double> v(n);
    for (double& x : v) x = dyadic(rng, radius);
    return v;
}

inline valdyn::TabularMdp random_dyadic_mdp(valdyn::Rng& rng, int max_states = 12,
                                            int max_actions = 4) {
    int S = 2 + rng.uniform_int(max_states - 1);
    int A = 1 + rng.uniform_int(max_actions);
    std::vector<int> t(static_cast<std::size_t>(S) * A);
    std::vector<double> r(t.size());
    for (int& x : t) x = rng.uniform_int(S);
    for (double& x : r) x = dyadic(rng, 1.0);
    return valdyn::TabularMdp(S, A, std::move(t), std::move(r), dyadic_gamma(rng));
}

// Two-state, two-action toy with closed-form values at gamma = 1/2:
// action 0 stays (reward 0), action 1 swaps states (reward 1).
// Optimal: Q* = [[1, 2], [1, 2]]. Uniform policy: Q_pi = [[0.5, 1.5], [0.5, 1.5]].
inline valdyn::TabularMdp stay_or_swap() {
    return valdyn::TabularMdp(2, 2, {0, 1, 1, 0}, {0.0, 1.0, 0.0, 1.0}, 0.5);
}

// Two-state, one-action chain s0 -> s1 -> s1 with rewards {0, 1} at
// gamma = 1/2: V* = [1, 2], Q* = [1, 2].
inline valdyn::TabularMdp absorbing_chain() {
    return valdyn::TabularMdp(2, 1, {1, 1}, {0.0, 1.0}, 0.5);
}

} // namespace testsupport
