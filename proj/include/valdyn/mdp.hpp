#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "valdyn/errors.hpp"
#include "valdyn/rng.hpp"
#include "valdyn/separability.hpp"

namespace valdyn {

/// Finite MDP with deterministic dynamics: next_state(s, a) is a single state
/// index. Immutable after construction; the constructor validates that every
/// transition target is in range, every reward is finite, and 0 <= gamma < 1.
class TabularMdp {
public:
    TabularMdp(int num_states, int num_actions, std::vector<int> transition,
               std::vector<double> reward, double gamma)
        : num_states_(num_states),
          num_actions_(num_actions),
          transition_(std::move(transition)),
          reward_(std::move(reward)),
          gamma_(gamma) {
        if (num_states_ <= 0 || num_actions_ <= 0)
            throw ValidationError("TabularMdp: num_states and num_actions must be positive");
        const std::size_t n = static_cast<std::size_t>(num_states_) * num_actions_;
        if (transition_.size() != n)
            throw ValidationError("TabularMdp: transition table has wrong size");
        if (reward_.size() != n)
            throw ValidationError("TabularMdp: reward table has wrong size");
        for (int t : transition_)
            if (t < 0 || t >= num_states_)
                throw ValidationError("TabularMdp: transition target out of range");
        for (double r : reward_)
            if (!std::isfinite(r)) throw ValidationError("TabularMdp: non-finite reward");
        if (!(gamma_ >= 0.0 && gamma_ < 1.0))
            throw ValidationError("TabularMdp: gamma must satisfy 0 <= gamma < 1");
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double gamma() const { return gamma_; }

    int next_state(int s, int a) const { return transition_[index(s, a)]; }
    double reward(int s, int a) const { return reward_[index(s, a)]; }

    const std::vector<int>& transitions() const { return transition_; }
    const std::vector<double>& rewards() const { return reward_; }

    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

private:
    int num_states_;
    int num_actions_;
    std::vector<int> transition_; // row-major (s, a) -> s'
    std::vector<double> reward_;  // row-major (s, a) -> r
    double gamma_;
};

/// Stochastic action-selection rule; probs is row-major (s, a). Each state's
/// probabilities must sum to 1 within 1e-12.
class Policy {
public:
    Policy(int num_states, int num_actions, std::vector<double> probs)
        : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
        if (num_states_ <= 0 || num_actions_ <= 0)
            throw ValidationError("Policy: num_states and num_actions must be positive");
        if (probs_.size() != static_cast<std::size_t>(num_states_) * num_actions_)
            throw ValidationError("Policy: probability table has wrong size");
        for (int s = 0; s < num_states_; ++s) {
            double sum = 0.0;
            for (int a = 0; a < num_actions_; ++a) {
                double p = probs_[index(s, a)];
                if (!(p >= 0.0 && p <= 1.0))
                    throw ValidationError("Policy: probability outside [0, 1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw ValidationError("Policy: probabilities for state " + std::to_string(s) +
                                      " sum to " + std::to_string(sum));
        }
    }

    static Policy uniform(int num_states, int num_actions) {
        std::vector<double> p(static_cast<std::size_t>(num_states) * num_actions,
                              1.0 / num_actions);
        return Policy(num_states, num_actions, std::move(p));
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double prob(int s, int a) const { return probs_[index(s, a)]; }

    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

private:
    int num_states_;
    int num_actions_;
    std::vector<double> probs_;
};

enum class ValueSource { solved, perturbed, loaded };

inline std::string to_string(ValueSource s) {
    switch (s) {
        case ValueSource::solved: return "solved";
        case ValueSource::perturbed: return "perturbed";
        case ValueSource::loaded: return "loaded";
    }
    return "unknown";
}

inline ValueSource value_source_from_string(std::string_view s) {
    if (s == "solved") return ValueSource::solved;
    if (s == "perturbed") return ValueSource::perturbed;
    if (s == "loaded") return ValueSource::loaded;
    throw ValidationError("unknown value source tag: '" + std::string(s) + "'");
}

/// Action-value matrix with an accuracy certificate. certified_epsilon, when
/// present, is a sup-norm bound on the distance to the exact fixed point; a
/// table produced by a bare backup carries no certificate.
class ValueTable {
public:
    ValueTable(int num_states, int num_actions, std::vector<double> q,
               std::optional<double> certified_epsilon = std::nullopt,
               ValueSource source = ValueSource::solved)
        : num_states_(num_states),
          num_actions_(num_actions),
          q_(std::move(q)),
          certified_epsilon_(certified_epsilon),
          source_(source) {
        if (num_states_ <= 0 || num_actions_ <= 0)
            throw ValidationError("ValueTable: num_states and num_actions must be positive");
        if (q_.size() != static_cast<std::size_t>(num_states_) * num_actions_)
            throw ValidationError("ValueTable: q matrix has wrong size");
        for (double x : q_)
            if (!std::isfinite(x)) throw ValidationError("ValueTable: non-finite entry");
        if (certified_epsilon_ && !(*certified_epsilon_ >= 0.0))
            throw ValidationError("ValueTable: certified_epsilon must be >= 0");
    }

    static ValueTable zeros(int num_states, int num_actions) {
        return ValueTable(num_states, num_actions,
                          std::vector<double>(static_cast<std::size_t>(num_states) * num_actions, 0.0));
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    double at(int s, int a) const { return q_[index(s, a)]; }
    const std::vector<double>& q() const { return q_; }
    std::optional<double> certified_epsilon() const { return certified_epsilon_; }
    double certified_or(double fallback) const { return certified_epsilon_.value_or(fallback); }
    ValueSource source() const { return source_; }

    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * num_actions_ + a;
    }

private:
    int num_states_;
    int num_actions_;
    std::vector<double> q_;
    std::optional<double> certified_epsilon_;
    ValueSource source_;
};

inline void require_same_shape(const TabularMdp& mdp, const ValueTable& q, const char* who) {
    if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions())
        throw ValidationError(std::string(who) + ": value table shape does not match the MDP");
}

inline void require_same_shape(const TabularMdp& mdp, const Policy& pi, const char* who) {
    if (pi.num_states() != mdp.num_states() || pi.num_actions() != mdp.num_actions())
        throw ValidationError(std::string(who) + ": policy shape does not match the MDP");
}

/// V(s) = max_a q[s, a].
inline std::vector<double> greedy_state_values(const ValueTable& q) {
    std::vector<double> v(q.num_states());
    for (int s = 0; s < q.num_states(); ++s) {
        double best = q.at(s, 0);
        for (int a = 1; a < q.num_actions(); ++a) best = std::max(best, q.at(s, a));
        v[s] = best;
    }
    return v;
}

/// V(s) = sum_a pi(a|s) q[s, a].
inline std::vector<double> policy_state_values(const ValueTable& q, const Policy& pi) {
    if (pi.num_states() != q.num_states() || pi.num_actions() != q.num_actions())
        throw ValidationError("policy_state_values: policy shape does not match the table");
    std::vector<double> v(q.num_states());
    for (int s = 0; s < q.num_states(); ++s) {
        double acc = 0.0;
        for (int a = 0; a < q.num_actions(); ++a) acc += pi.prob(s, a) * q.at(s, a);
        v[s] = acc;
    }
    return v;
}

namespace detail {

inline std::vector<double> backup_against(const TabularMdp& mdp, const ValueTable& q,
                                          const std::vector<double>& v) {
    std::vector<double> out(q.q().size());
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a) {
            std::size_t i = mdp.index(s, a);
            out[i] = mdp.reward(s, a) + mdp.gamma() * v[mdp.next_state(s, a)];
        }
    return out;
}

} // namespace detail

/// One application of the Bellman optimality operator:
/// out[s, a] = r(s, a) + gamma * max_a' q[next_state(s, a), a'].
/// The result carries no accuracy certificate.
inline ValueTable bellman_optimality_backup(const TabularMdp& mdp, const ValueTable& q) {
    require_same_shape(mdp, q, "bellman_optimality_backup");
    return ValueTable(q.num_states(), q.num_actions(),
                      detail::backup_against(mdp, q, greedy_state_values(q)));
}

/// One application of the policy backup:
/// out[s, a] = r(s, a) + gamma * sum_a' pi(a'|s') q[s', a'], s' = next_state(s, a).
inline ValueTable bellman_policy_backup(const TabularMdp& mdp, const Policy& pi,
                                        const ValueTable& q) {
    require_same_shape(mdp, q, "bellman_policy_backup");
    require_same_shape(mdp, pi, "bellman_policy_backup");
    return ValueTable(q.num_states(), q.num_actions(),
                      detail::backup_against(mdp, q, policy_state_values(q, pi)));
}

struct SolveReport {
    std::uint64_t iterations = 0;
    double final_residual = 0.0;   // sup-norm of the last backup change
    double certified_epsilon = 0.0; // gamma * final_residual / (1 - gamma)
};

struct SolveResult {
    ValueTable table;
    SolveReport report;
};

inline constexpr std::uint64_t kDefaultIterationCap = 10'000'000;

namespace detail {

template <typename StateValues>
SolveResult iterate_to_fixed_point(const TabularMdp& mdp, double epsilon_target,
                                   std::uint64_t max_iterations, StateValues&& state_values) {
    if (!(epsilon_target > 0.0))
        throw ValidationError("value_iteration: epsilon_target must be > 0");

    const int S = mdp.num_states(), A = mdp.num_actions();
    const double gamma = mdp.gamma();
    std::vector<double> q(static_cast<std::size_t>(S) * A, 0.0);
    std::vector<double> v(S);
    double residual = std::numeric_limits<double>::infinity();

    for (std::uint64_t k = 1; k <= max_iterations; ++k) {
        state_values(q, v);
        residual = 0.0;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                std::size_t i = mdp.index(s, a);
                double next = mdp.reward(s, a) + gamma * v[mdp.next_state(s, a)];
                residual = std::max(residual, std::abs(next - q[i]));
                q[i] = next;
            }
        double certificate = gamma * residual / (1.0 - gamma);
        if (certificate <= epsilon_target) {
            return SolveResult{
                ValueTable(S, A, std::move(q), certificate, ValueSource::solved),
                SolveReport{k, residual, certificate}};
        }
    }
    throw ConvergenceError("value_iteration: iteration cap exceeded before reaching the "
                           "requested certificate",
                           max_iterations, residual);
}

} // namespace detail

/// Bellman optimality iteration from q = 0, stopped at the first iterate whose
/// contraction certificate gamma * ||q_{k+1} - q_k||_inf / (1 - gamma) drops to
/// epsilon_target or below. The certificate bounds ||q - q*||_inf.
inline SolveResult value_iteration(const TabularMdp& mdp, double epsilon_target,
                                   std::uint64_t max_iterations = kDefaultIterationCap) {
    const int A = mdp.num_actions();
    return detail::iterate_to_fixed_point(
        mdp, epsilon_target, max_iterations,
        [&](const std::vector<double>& q, std::vector<double>& v) {
            for (int s = 0; s < mdp.num_states(); ++s) {
                std::size_t base = static_cast<std::size_t>(s) * A;
                double best = q[base];
                for (int a = 1; a < A; ++a) best = std::max(best, q[base + a]);
                v[s] = best;
            }
        });
}

/// Policy-evaluation variant of the same iteration.
inline SolveResult value_iteration(const TabularMdp& mdp, const Policy& pi,
                                   double epsilon_target,
                                   std::uint64_t max_iterations = kDefaultIterationCap) {
    require_same_shape(mdp, pi, "value_iteration");
    const int A = mdp.num_actions();
    return detail::iterate_to_fixed_point(
        mdp, epsilon_target, max_iterations,
        [&](const std::vector<double>& q, std::vector<double>& v) {
            for (int s = 0; s < mdp.num_states(); ++s) {
                std::size_t base = static_cast<std::size_t>(s) * A;
                double acc = 0.0;
                for (int a = 0; a < A; ++a) acc += pi.prob(s, a) * q[base + a];
                v[s] = acc;
            }
        });
}

enum class PerturbMode { uniform, adversarial_pair };

/// Produces an epsilon-accurate estimate of the input table.
///
/// uniform: every entry is shifted by an independent draw from [-eps, +eps].
/// adversarial_pair: the two states attaining the minimum greedy-value gap are
/// pushed toward each other (higher-valued state -eps on all its entries,
/// lower-valued +eps), the worst case for separability: the minimum gap
/// shrinks to exactly delta - 2*eps while no other pair can drop below it.
///
/// The certificate grows by eps; an uncertified input stays uncertified.
inline ValueTable perturb_values(const ValueTable& q, double epsilon, PerturbMode mode,
                                 std::uint64_t seed) {
    if (!(epsilon >= 0.0)) throw ValidationError("perturb_values: epsilon must be >= 0");

    std::vector<double> out = q.q();
    if (mode == PerturbMode::uniform) {
        Rng rng(seed);
        for (double& x : out) x += rng.symmetric(epsilon);
    } else {
        std::vector<double> v = greedy_state_values(q);
        SeparabilityReport gap = value_gap(v);
        auto [i, j] = gap.argpair;
        int lower = v[i] <= v[j] ? i : j;
        int higher = lower == i ? j : i;
        for (int a = 0; a < q.num_actions(); ++a) {
            out[q.index(lower, a)] += epsilon;
            out[q.index(higher, a)] -= epsilon;
        }
    }

    std::optional<double> cert = q.certified_epsilon();
    if (cert) cert = *cert + epsilon;
    return ValueTable(q.num_states(), q.num_actions(), std::move(out), cert,
                      ValueSource::perturbed);
}

} // namespace valdyn
