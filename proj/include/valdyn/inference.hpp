#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "valdyn/errors.hpp"
#include "valdyn/gridworld.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/textio.hpp"

namespace valdyn {

/// Outcome of one successor-state lookup. value_distance is |V(predicted) - scanned|,
/// the smallest such distance over all states; runner_up_margin is the gap to
/// the second-closest state (infinite when only one state exists).
struct InferenceResult {
    int predicted_state = -1;
    double scanned_value = 0.0;
    double value_distance = 0.0;
    double runner_up_margin = 0.0;
    bool ambiguous = false;
};

/// States whose value lies within tolerance of a center value: the candidate
/// successor set implied by one value function.
struct LevelSet {
    std::vector<int> members; // ascending state indices
    double center_value = 0.0;
    double tolerance = 0.0;
};

/// Dynamics model recovered from a value table, with per-pair diagnostics.
struct InferredModel {
    int num_states = 0;
    int num_actions = 0;
    std::vector<int> next_state;            // row-major (s, a) -> predicted s'
    std::vector<InferenceResult> per_pair;  // row-major (s, a)

    int predicted(int s, int a) const {
        return next_state[static_cast<std::size_t>(s) * num_actions + a];
    }
    const InferenceResult& result(int s, int a) const {
        return per_pair[static_cast<std::size_t>(s) * num_actions + a];
    }
};

/// The value the true successor state must have, read off the Bellman
/// equation: (q[s, a] - r(s, a)) / gamma.
inline double scanned_value(const ValueTable& q, const TabularMdp& mdp, int s, int a) {
    require_same_shape(mdp, q, "scanned_value");
    if (!(mdp.gamma() > 0.0))
        throw ValidationError("scanned_value: gamma must be positive to divide out the discount");
    if (s < 0 || s >= mdp.num_states() || a < 0 || a >= mdp.num_actions())
        throw ValidationError("scanned_value: state or action index out of range");
    return (q.at(s, a) - mdp.reward(s, a)) / mdp.gamma();
}

/// Nearest-value lookup: the state whose value is closest to the scanned
/// value, ties broken toward the lowest state index. The result is flagged
/// ambiguous when the runner-up sits within ambiguity_margin.
inline InferenceResult infer_next_state(std::span<const double> v, double scanned,
                                        double ambiguity_margin) {
    if (v.empty()) throw ValidationError("infer_next_state: empty value vector");
    if (!(ambiguity_margin >= 0.0))
        throw ValidationError("infer_next_state: ambiguity_margin must be >= 0");

    int best = 0;
    double best_dist = std::abs(v[0] - scanned);
    double second = std::numeric_limits<double>::infinity();
    for (int s = 1; s < static_cast<int>(v.size()); ++s) {
        double d = std::abs(v[s] - scanned);
        if (d < best_dist) {
            second = best_dist;
            best_dist = d;
            best = s;
        } else {
            second = std::min(second, d);
        }
    }
    double margin = second - best_dist;
    return InferenceResult{best, scanned, best_dist, margin, margin <= ambiguity_margin};
}

namespace detail {

inline InferredModel infer_model_core(const ValueTable& q, std::span<const double> reward,
                                      double gamma, const std::vector<double>& v) {
    if (!(gamma > 0.0))
        throw ValidationError("infer_model: gamma must be positive to divide out the discount");
    if (reward.size() != q.q().size())
        throw ValidationError("infer_model: reward shape does not match the table");
    // Width of the scanned-value uncertainty band for an eps-accurate table.
    double margin = 2.0 * q.certified_or(0.0) / gamma;
    InferredModel model;
    model.num_states = q.num_states();
    model.num_actions = q.num_actions();
    model.next_state.resize(q.q().size());
    model.per_pair.resize(q.q().size());
    for (int s = 0; s < q.num_states(); ++s)
        for (int a = 0; a < q.num_actions(); ++a) {
            std::size_t i = q.index(s, a);
            double scanned = (q.at(s, a) - reward[i]) / gamma;
            InferenceResult r = infer_next_state(v, scanned, margin);
            model.next_state[i] = r.predicted_state;
            model.per_pair[i] = r;
        }
    return model;
}

} // namespace detail

/// Recovers the full dynamics model from a value table by scanning every
/// (s, a) pair against greedy state values. Needs only the reward and
/// discount, not the transitions being recovered.
inline InferredModel infer_model(const ValueTable& q, std::span<const double> reward,
                                 double gamma) {
    return detail::infer_model_core(q, reward, gamma, greedy_state_values(q));
}

inline InferredModel infer_model(const ValueTable& q, const TabularMdp& mdp) {
    require_same_shape(mdp, q, "infer_model");
    return detail::infer_model_core(q, mdp.rewards(), mdp.gamma(), greedy_state_values(q));
}

/// Same recovery against policy-expectation state values.
inline InferredModel infer_model(const ValueTable& q, const TabularMdp& mdp, const Policy& pi) {
    require_same_shape(mdp, q, "infer_model");
    require_same_shape(mdp, pi, "infer_model");
    return detail::infer_model_core(q, mdp.rewards(), mdp.gamma(), policy_state_values(q, pi));
}

/// Fraction of (s, a) pairs whose predicted successor matches the true one.
inline double model_accuracy(const InferredModel& model, const TabularMdp& mdp) {
    if (model.num_states != mdp.num_states() || model.num_actions != mdp.num_actions())
        throw ValidationError("model_accuracy: model shape does not match the MDP");
    std::size_t hits = 0;
    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (model.predicted(s, a) == mdp.next_state(s, a)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(model.next_state.size());
}

/// All states with |v[s] - center| <= tolerance.
inline LevelSet level_set(std::span<const double> v, double center, double tolerance) {
    if (!(tolerance >= 0.0)) throw ValidationError("level_set: tolerance must be >= 0");
    LevelSet set;
    set.center_value = center;
    set.tolerance = tolerance;
    for (int s = 0; s < static_cast<int>(v.size()); ++s)
        if (std::abs(v[s] - center) <= tolerance) set.members.push_back(s);
    return set;
}

struct IntersectionResult {
    std::vector<int> members;
    bool inconsistent = false; // empty intersection: value functions disagree
                               // or the tolerances are too small
};

/// Intersection of candidate successor sets from multiple value functions.
/// An empty result is reported as inconsistent, never silently widened.
inline IntersectionResult intersect_level_sets(std::span<const LevelSet> sets) {
    if (sets.empty()) throw ValidationError("intersect_level_sets: need at least one set");
    std::vector<int> acc = sets[0].members;
    for (std::size_t k = 1; k < sets.size() && !acc.empty(); ++k) {
        std::vector<int> next;
        std::set_intersection(acc.begin(), acc.end(), sets[k].members.begin(),
                              sets[k].members.end(), std::back_inserter(next));
        acc = std::move(next);
    }
    bool inconsistent = acc.empty();
    return IntersectionResult{std::move(acc), inconsistent};
}

/// Keeps members within Manhattan grid distance radius of the current state.
inline std::vector<int> prune_by_locality(const LevelSet& set, int current, int radius,
                                          const GridSpec& geometry) {
    if (radius < 0) throw ValidationError("prune_by_locality: radius must be >= 0");
    if (current < 0 || current >= geometry.num_states())
        throw ValidationError("prune_by_locality: current state outside the grid");
    std::vector<int> kept;
    for (int s : set.members) {
        if (s < 0 || s >= geometry.num_states())
            throw ValidationError("prune_by_locality: member state outside the grid");
        if (geometry.manhattan(s, current) <= radius) kept.push_back(s);
    }
    return kept;
}

/// Writes the model as a text table with columns
/// state action predicted_next true_next value_distance ambiguous;
/// true_next is '-' when no reference dynamics are supplied.
inline void write_model_table(std::ostream& os, const InferredModel& model,
                              const TabularMdp* truth = nullptr) {
    os << "state\taction\tpredicted_next\ttrue_next\tvalue_distance\tambiguous\n";
    for (int s = 0; s < model.num_states; ++s)
        for (int a = 0; a < model.num_actions; ++a) {
            const InferenceResult& r = model.result(s, a);
            os << s << '\t' << a << '\t' << r.predicted_state << '\t';
            if (truth)
                os << truth->next_state(s, a);
            else
                os << '-';
            os << '\t' << format_real17(r.value_distance) << '\t' << (r.ambiguous ? 1 : 0)
               << '\n';
        }
}

} // namespace valdyn
