#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "valdyn/errors.hpp"

namespace valdyn {

/// Minimum pairwise state-value gap, the pair attaining it, and (when the
/// discount factor is known) the critical accuracy below which the dynamics
/// model is identifiable.
struct SeparabilityReport {
    double delta = 0.0;
    std::pair<int, int> argpair{-1, -1};
    std::optional<double> threshold; // delta / (2/gamma + 2), filled by assess_separability
};

/// Critical value-function accuracy: an estimate within epsilon of the true
/// values recovers every successor state exactly whenever
/// epsilon < delta / (2/gamma + 2).
inline double identifiability_threshold(double delta, double gamma) {
    if (!(delta >= 0.0)) throw ValidationError("identifiability_threshold: delta must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("identifiability_threshold: gamma must be in (0, 1)");
    return delta / (2.0 / gamma + 2.0);
}

/// Strict test: the boundary epsilon == threshold is excluded.
inline bool is_identifiable(double delta, double epsilon, double gamma) {
    if (!(epsilon >= 0.0)) throw ValidationError("is_identifiable: epsilon must be >= 0");
    return epsilon < identifiability_threshold(delta, gamma);
}

/// Worst-case minimum gap of an epsilon-perturbed value vector: delta - 2*epsilon.
/// May be negative, signaling that value overlap is possible.
inline double perturbed_gap_lower_bound(double delta, double epsilon) {
    if (!(delta >= 0.0))
        throw ValidationError("perturbed_gap_lower_bound: delta must be >= 0");
    if (!(epsilon >= 0.0))
        throw ValidationError("perturbed_gap_lower_bound: epsilon must be >= 0");
    return delta - 2.0 * epsilon;
}

/// Minimum |v[i] - v[j]| over distinct pairs; argpair is the lexicographically
/// smallest (i, j), i < j, attaining it. O(n log n): after sorting by
/// (value, index), every attaining pair is adjacent.
inline SeparabilityReport value_gap(std::span<const double> v) {
    if (v.size() < 2) throw ValidationError("value_gap: need at least 2 states");
    const std::size_t n = v.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return v[a] != v[b] ? v[a] < v[b] : a < b;
    });

    SeparabilityReport report;
    report.delta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        int i = order[k], j = order[k + 1];
        double gap = std::abs(v[j] - v[i]);
        std::pair<int, int> pair{std::min(i, j), std::max(i, j)};
        if (gap < report.delta || (gap == report.delta && pair < report.argpair)) {
            report.delta = gap;
            report.argpair = pair;
        }
    }
    return report;
}

/// value_gap plus the identifiability threshold for the given discount factor.
/// A non-separable vector (delta == 0) reports threshold 0.
inline SeparabilityReport assess_separability(std::span<const double> v, double gamma) {
    SeparabilityReport report = value_gap(v);
    report.threshold = identifiability_threshold(report.delta, gamma);
    return report;
}

} // namespace valdyn
