#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <vector>

#include "valdyn/errors.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/rng.hpp"
#include "valdyn/separability.hpp"

namespace valdyn {

/// Empty square grid, row-major state indexing, four cardinal actions.
/// Row 0 is the top row, so north decreases the row index.
struct GridSpec {
    int side;

    enum Action : int { north = 0, south = 1, east = 2, west = 3 };
    static constexpr int kNumActions = 4;

    int num_states() const { return side * side; }
    int state_of(int row, int col) const { return row * side + col; }
    int row_of(int s) const { return s / side; }
    int col_of(int s) const { return s % side; }

    int manhattan(int s, int t) const {
        return std::abs(row_of(s) - row_of(t)) + std::abs(col_of(s) - col_of(t));
    }
};

/// Dynamics of an empty side x side grid with wall clamp: a move off the edge
/// leaves the state unchanged. Rewards are zeroed.
inline TabularMdp make_empty_grid(int side, double gamma) {
    if (side < 1) throw ValidationError("make_empty_grid: side must be >= 1");
    GridSpec grid{side};
    const int n = grid.num_states();
    std::vector<int> transition(static_cast<std::size_t>(n) * GridSpec::kNumActions);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
            int s = grid.state_of(r, c);
            auto put = [&](GridSpec::Action a, int rr, int cc) {
                transition[static_cast<std::size_t>(s) * GridSpec::kNumActions + a] =
                    grid.state_of(rr, cc);
            };
            put(GridSpec::north, r > 0 ? r - 1 : 0, c);
            put(GridSpec::south, r < side - 1 ? r + 1 : r, c);
            put(GridSpec::east, r, c < side - 1 ? c + 1 : c);
            put(GridSpec::west, r, c > 0 ? c - 1 : 0);
        }
    std::vector<double> reward(static_cast<std::size_t>(n) * GridSpec::kNumActions, 0.0);
    return TabularMdp(n, GridSpec::kNumActions, std::move(transition), std::move(reward), gamma);
}

/// side^2 independent uniform draws strictly inside (-1, 1).
inline std::vector<double> sample_reward(int side, std::uint64_t seed) {
    if (side < 1) throw ValidationError("sample_reward: side must be >= 1");
    Rng rng(seed);
    std::vector<double> r(static_cast<std::size_t>(side) * side);
    for (double& x : r) x = rng.open_symmetric_unit();
    return r;
}

/// Installs state-based rewards into a copy of the MDP: r(s, a) = rho(s) for
/// every action.
inline TabularMdp with_state_rewards(const TabularMdp& mdp, std::span<const double> rho) {
    if (rho.size() != static_cast<std::size_t>(mdp.num_states()))
        throw ValidationError("with_state_rewards: reward vector length must equal num_states");
    std::vector<double> reward(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions());
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a)
            reward[mdp.index(s, a)] = rho[s];
    return TabularMdp(mdp.num_states(), mdp.num_actions(), mdp.transitions(), std::move(reward),
                      mdp.gamma());
}

struct RewardSearchResult {
    std::vector<double> reward; // state-based, length side^2
    double achieved_delta = 0.0;
    std::uint64_t attempts = 0;
    std::uint64_t seed = 0; // the seed that produced the accepted reward
};

/// Rejection search exhausted max_attempts; best_candidate is the closest
/// reward found (empty if no attempt produced at least two distinct values).
class GapSearchError : public std::runtime_error {
public:
    GapSearchError(const std::string& what, RewardSearchResult best)
        : std::runtime_error(what), best_candidate(std::move(best)) {}

    RewardSearchResult best_candidate;
};

/// Rejection-samples reward functions until the solved task's minimum
/// state-value gap lands within rel_tol (relative) of target_delta. Attempt k
/// uses seed + k (0-based), so a search is reproducible and can be resumed.
/// Each attempt is solved to certificate 1e-12 and measured with value_gap on
/// greedy state values.
inline RewardSearchResult find_reward_with_gap(int side, double gamma, double target_delta,
                                               double rel_tol, std::uint64_t seed,
                                               std::uint64_t max_attempts) {
    if (!(target_delta > 0.0))
        throw ValidationError("find_reward_with_gap: target_delta must be > 0");
    if (!(rel_tol >= 0.0)) throw ValidationError("find_reward_with_gap: rel_tol must be >= 0");
    if (max_attempts == 0) throw ValidationError("find_reward_with_gap: max_attempts must be > 0");

    const TabularMdp grid = make_empty_grid(side, gamma);
    RewardSearchResult best;
    double best_miss = std::numeric_limits<double>::infinity();

    for (std::uint64_t k = 0; k < max_attempts; ++k) {
        std::uint64_t attempt_seed = seed + k;
        std::vector<double> rho = sample_reward(side, attempt_seed);
        TabularMdp task = with_state_rewards(grid, rho);
        SolveResult solved = value_iteration(task, 1e-12);
        double delta = value_gap(greedy_state_values(solved.table)).delta;
        double miss = std::abs(delta - target_delta);
        if (miss < best_miss) {
            best_miss = miss;
            best = RewardSearchResult{std::move(rho), delta, k + 1, attempt_seed};
        }
        if (miss <= rel_tol * target_delta) {
            best.attempts = k + 1;
            return best;
        }
    }
    throw GapSearchError("find_reward_with_gap: no reward within tolerance after " +
                             std::to_string(max_attempts) + " attempts",
                         std::move(best));
}

} // namespace valdyn
