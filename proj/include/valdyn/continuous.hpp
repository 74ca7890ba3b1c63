#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "valdyn/errors.hpp"
#include "valdyn/rng.hpp"
#include "valdyn/textio.hpp"

namespace valdyn {

/// Piecewise-linear function on [0, 1] given by node coordinates. Node
/// x-values are strictly increasing with x.front() == 0 and x.back() == 1;
/// y-values may be arbitrary finite reals, so monotonicity is a property
/// checked by the operations that need it, not by construction.
class PiecewiseLinearValue {
  public:
    PiecewiseLinearValue(std::vector<double> xs, std::vector<double> ys)
        : xs_(std::move(xs)), ys_(std::move(ys)) {
        if (xs_.size() < 2 || xs_.size() != ys_.size())
            throw ValidationError("PiecewiseLinearValue: need matching node lists of size >= 2");
        if (xs_.front() != 0.0 || xs_.back() != 1.0)
            throw ValidationError("PiecewiseLinearValue: domain must be exactly [0, 1]");
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i]))
                throw ValidationError("PiecewiseLinearValue: nodes must be finite");
            if (i > 0 && !(xs_[i] > xs_[i - 1]))
                throw ValidationError("PiecewiseLinearValue: x coordinates must strictly increase");
        }
    }

    int num_segments() const { return static_cast<int>(xs_.size()) - 1; }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }

    double value(double x) const {
        if (!(x >= 0.0 && x <= 1.0))
            throw ValidationError("PiecewiseLinearValue: query outside [0, 1]");
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs_.begin());
        i = std::clamp<std::size_t>(i, 1, xs_.size() - 1) - 1;
        double slope = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
        return ys_[i] + slope * (x - xs_[i]);
    }

    double min_slope() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
            m = std::min(m, (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]));
        return m;
    }

    double max_slope() const {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
            m = std::max(m, (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]));
        return m;
    }

  private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

/// Minimum segment slope, the constant L with |V(a) - V(b)| >= L|a - b|.
/// Throws when any segment fails to increase, since L would not be positive.
inline double reverse_lipschitz_constant(const PiecewiseLinearValue& v) {
    double m = v.min_slope();
    if (!(m > 0.0))
        throw ValidationError("reverse_lipschitz_constant: function is not strictly increasing");
    return m;
}

/// Random strictly increasing piecewise-linear function on [0, 1] with
/// evenly spaced nodes and segment slopes drawn uniformly from [L, 10L].
inline PiecewiseLinearValue build_monotone_value(int num_segments, double L, std::uint64_t seed) {
    if (num_segments < 1)
        throw ValidationError("build_monotone_value: num_segments must be >= 1");
    if (!(L > 0.0) || !std::isfinite(L))
        throw ValidationError("build_monotone_value: slope floor L must be positive");
    Rng rng(seed);
    std::vector<double> xs(static_cast<std::size_t>(num_segments) + 1);
    std::vector<double> ys(xs.size());
    ys[0] = rng.symmetric(1.0);
    for (int i = 0; i < num_segments; ++i) {
        xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / num_segments;
        double slope = rng.uniform(L, 10.0 * L);
        ys[static_cast<std::size_t>(i) + 1] =
            ys[static_cast<std::size_t>(i)] + slope / num_segments;
    }
    xs.back() = 1.0;
    return PiecewiseLinearValue(std::move(xs), std::move(ys));
}

/// Node-wise perturbation by draws in [-epsilon, +epsilon], clipped in one
/// forward pass so the result keeps a positive slope floor. Both bounds are
/// compatible: the monotonicity floor eta sits far below every true slope,
/// so the clip window [max(y - eps, prev + eta dx), y + eps] is never empty.
/// The perturbed nodes stay within epsilon of the originals, and because both
/// functions share the same x grid the sup-norm deviation equals the largest
/// node deviation.
inline PiecewiseLinearValue perturb_value_nodes(const PiecewiseLinearValue& v, double epsilon,
                                                Rng& rng) {
    if (!(epsilon >= 0.0))
        throw ValidationError("perturb_value_nodes: epsilon must be >= 0");
    double eta = 1e-3 * reverse_lipschitz_constant(v);
    const std::vector<double>& xs = v.xs();
    const std::vector<double>& ys = v.ys();
    std::vector<double> out(ys.size());
    out[0] = ys[0] + rng.symmetric(epsilon);
    for (std::size_t i = 1; i < ys.size(); ++i) {
        double lo = std::max(ys[i] - epsilon, out[i - 1] + eta * (xs[i] - xs[i - 1]));
        double hi = ys[i] + epsilon;
        out[i] = std::clamp(ys[i] + rng.symmetric(epsilon), lo, hi);
    }
    return PiecewiseLinearValue(xs, std::move(out));
}

struct InvertResult {
    double state = 0.0;
    bool extrapolated = false; // target value fell outside the function's range
};

/// Inverse lookup by bisection on a strictly increasing function: for
/// in-range y returns s with |s - V^{-1}(y)| <= tol; out-of-range y clamps
/// to the nearer endpoint and reports extrapolation.
inline InvertResult invert_value(const PiecewiseLinearValue& v, double y, double tol) {
    if (!(tol > 0.0)) throw ValidationError("invert_value: tol must be positive");
    reverse_lipschitz_constant(v); // rejects non-increasing functions
    if (y <= v.ys().front()) return InvertResult{0.0, y < v.ys().front()};
    if (y >= v.ys().back()) return InvertResult{1.0, y > v.ys().back()};
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (v.value(mid) < y)
            lo = mid;
        else
            hi = mid;
    }
    return InvertResult{0.5 * (lo + hi), false};
}

/// Worst-case successor error after an epsilon-accurate estimate, scaled by
/// the inverse slope: (1 + gamma) * epsilon / (gamma * L).
inline double successor_error_bound(double epsilon, double gamma, double L) {
    if (!(epsilon >= 0.0)) throw ValidationError("successor_error_bound: epsilon must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("successor_error_bound: gamma must lie in (0, 1)");
    if (!(L > 0.0)) throw ValidationError("successor_error_bound: L must be positive");
    return (1.0 + gamma) * epsilon / (gamma * L);
}

/// Slope floor an action-value function inherits from reward and transition
/// smoothness: L_r / (1 - gamma * L_p * (1 + L_pi)). The denominator must be
/// positive for the floor to exist.
inline double action_value_slope_floor(double L_r, double L_p, double L_pi, double gamma) {
    if (!(L_r > 0.0)) throw ValidationError("action_value_slope_floor: L_r must be positive");
    if (!(L_p > 0.0)) throw ValidationError("action_value_slope_floor: L_p must be positive");
    if (!(L_pi >= 0.0)) throw ValidationError("action_value_slope_floor: L_pi must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("action_value_slope_floor: gamma must lie in (0, 1)");
    double denom = 1.0 - gamma * L_p * (1.0 + L_pi);
    if (!(denom > 0.0))
        throw ValidationError("action_value_slope_floor: gamma * L_p * (1 + L_pi) must stay below 1");
    return L_r / denom;
}

inline constexpr double kBisectionTol = 1e-10;
// Allowance for bisection error when deciding a bound violation; ten times
// the state-space tolerance, far below any bound at the epsilons of interest.
inline constexpr double kViolationSlack = 1e-9;

struct ContinuousTrialReport {
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double gamma = 0.0;
    double requested_L = 0.0; // slope floor given to the generator
    double true_L = 0.0;      // measured constant of the unperturbed function
    double effective_L = 0.0; // measured constant of the perturbed function
    double max_observed_error = 0.0;
    double bound = 0.0; // evaluated with effective_L
    bool violated = false;
};

/// One randomized check of the successor-error bound: build a value function,
/// perturb it and the action values within epsilon, recover each sampled
/// successor by inverting the perturbed function at the scanned value, and
/// compare the worst recovery error against the bound. The bound uses the
/// perturbed function's measured constant, the conservative reading.
inline ContinuousTrialReport run_continuous_trial(int num_segments, double L, double epsilon,
                                                  double gamma, int num_queries,
                                                  std::uint64_t seed) {
    if (num_queries < 1)
        throw ValidationError("run_continuous_trial: num_queries must be >= 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ValidationError("run_continuous_trial: epsilon must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw ValidationError("run_continuous_trial: gamma must lie in (0, 1)");

    PiecewiseLinearValue v = build_monotone_value(num_segments, L, mix_seed(seed, 0, 0));
    Rng rng(mix_seed(seed, 1, 0));
    PiecewiseLinearValue vhat = perturb_value_nodes(v, epsilon, rng);

    double max_err = 0.0;
    for (int j = 0; j < num_queries; ++j) {
        double s_true = rng.uniform01();
        double reward = rng.open_symmetric_unit();
        double q = reward + gamma * v.value(s_true);
        double q_hat = q + rng.symmetric(epsilon);
        double scanned = (q_hat - reward) / gamma;
        InvertResult inv = invert_value(vhat, scanned, kBisectionTol);
        max_err = std::max(max_err, std::abs(inv.state - s_true));
    }

    ContinuousTrialReport report;
    report.seed = seed;
    report.epsilon = epsilon;
    report.gamma = gamma;
    report.requested_L = L;
    report.true_L = reverse_lipschitz_constant(v);
    report.effective_L = reverse_lipschitz_constant(vhat);
    report.max_observed_error = max_err;
    report.bound = successor_error_bound(epsilon, gamma, report.effective_L);
    report.violated = max_err >= report.bound + kViolationSlack;
    return report;
}

/// CSV emission for trial batches, one row per trial.
inline void write_trial_table(std::ostream& os, std::span<const ContinuousTrialReport> reports) {
    os << "seed,epsilon,gamma,L,effective_L,max_error,bound,violated\n";
    for (const ContinuousTrialReport& r : reports) {
        os << r.seed << ',' << format_real17(r.epsilon) << ',' << format_real17(r.gamma) << ','
           << format_real17(r.requested_L) << ',' << format_real17(r.effective_L) << ','
           << format_real17(r.max_observed_error) << ',' << format_real17(r.bound) << ','
           << (r.violated ? 1 : 0) << '\n';
    }
}

} // namespace valdyn
