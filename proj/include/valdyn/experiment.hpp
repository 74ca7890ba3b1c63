#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "valdyn/continuous.hpp"
#include "valdyn/errors.hpp"
#include "valdyn/gridworld.hpp"
#include "valdyn/inference.hpp"
#include "valdyn/mdp.hpp"
#include "valdyn/rng.hpp"
#include "valdyn/separability.hpp"
#include "valdyn/textio.hpp"

namespace valdyn {

/// How an epsilon-accurate table is produced for the accuracy sweep.
/// iteration_truncation stops the solver at the first certificate <= epsilon;
/// perturbation adds worst-case-style noise to an exactly solved table.
enum class EpsilonMode { iteration_truncation, perturbation };

inline std::string to_string(EpsilonMode m) {
    return m == EpsilonMode::iteration_truncation ? "iteration_truncation" : "perturbation";
}

inline EpsilonMode epsilon_mode_from_string(std::string_view s) {
    if (s == "iteration_truncation") return EpsilonMode::iteration_truncation;
    if (s == "perturbation") return EpsilonMode::perturbation;
    throw ValidationError("epsilon_mode must be iteration_truncation or perturbation");
}

// Sweep construction: per delta target, epsilons are these multiples of the
// critical epsilon, so every curve straddles its own threshold line.
inline const std::vector<double>& default_epsilon_sweep() {
    static const std::vector<double> sweep = [] {
        std::vector<double> m(12);
        for (int k = 0; k < 12; ++k)
            m[static_cast<std::size_t>(k)] = std::pow(10.0, -1.0 + 2.0 * k / 11.0);
        return m;
    }();
    return sweep;
}

inline constexpr double kGapRelTol = 0.01;           // 1 percent delta tolerance
inline constexpr std::uint64_t kGapSearchAttempts = 20000;
inline constexpr double kExactSolveEpsilon = 1e-12;  // "effectively exact" certificate

struct Fig1Config {
    int grid_side = 5;
    double gamma = 0.99;
    // Separability targets; small enough to occur among random 5x5 tasks.
    std::vector<double> delta_targets = {0.005, 0.01, 0.02};
    // Multiples of each target's critical epsilon (log-spaced).
    std::vector<double> epsilon_sweep = default_epsilon_sweep();
    int tasks_per_delta = 20;
    std::uint64_t base_seed = 1;
    EpsilonMode epsilon_mode = EpsilonMode::iteration_truncation;
};

struct CurvePoint {
    double delta_target = 0.0;
    double epsilon = 0.0; // absolute table accuracy, multiplier * critical
    double mean_accuracy = 0.0;
    double standard_error = 0.0;
    double critical_epsilon = 0.0; // delta_target / (2/gamma + 2)
};

inline void validate(const Fig1Config& c) {
    if (c.grid_side < 2) throw ValidationError("fig1 config: grid_side must be >= 2");
    if (!(c.gamma > 0.0 && c.gamma < 1.0))
        throw ValidationError("fig1 config: gamma must lie in (0, 1)");
    if (c.delta_targets.empty()) throw ValidationError("fig1 config: delta_targets is empty");
    for (double d : c.delta_targets)
        if (!(d > 0.0) || !std::isfinite(d))
            throw ValidationError("fig1 config: delta targets must be positive");
    if (c.epsilon_sweep.empty()) throw ValidationError("fig1 config: epsilon_sweep is empty");
    for (double m : c.epsilon_sweep)
        if (!(m > 0.0) || !std::isfinite(m))
            throw ValidationError("fig1 config: sweep multipliers must be positive");
    if (c.tasks_per_delta < 1)
        throw ValidationError("fig1 config: tasks_per_delta must be >= 1");
}

namespace detail {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0; // sample stddev (n-1 denominator) / sqrt(n)
};

inline MeanSe mean_and_standard_error(std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return MeanSe{mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double stddev = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
    return MeanSe{mean, stddev / std::sqrt(static_cast<double>(xs.size()))};
}

} // namespace detail

/// Accuracy of recovered dynamics as a function of value-table accuracy, one
/// curve per separability target. Every task, solve, and noise draw is a pure
/// function of base_seed, so identical configs give identical output; task
/// (di, ti) draws nothing from any other task's stream.
inline std::vector<CurvePoint> run_fig1(const Fig1Config& config) {
    validate(config);
    std::vector<double> multipliers = config.epsilon_sweep;
    std::sort(multipliers.begin(), multipliers.end());

    std::vector<CurvePoint> out;
    for (std::size_t di = 0; di < config.delta_targets.size(); ++di) {
        double delta = config.delta_targets[di];
        double critical = identifiability_threshold(delta, config.gamma);

        std::vector<TabularMdp> tasks;
        std::vector<std::uint64_t> task_seeds;
        std::vector<ValueTable> exact; // perturbation mode reuses one exact solve
        tasks.reserve(static_cast<std::size_t>(config.tasks_per_delta));
        for (int ti = 0; ti < config.tasks_per_delta; ++ti) {
            std::uint64_t st = mix_seed(config.base_seed, di, static_cast<std::uint64_t>(ti));
            RewardSearchResult found = find_reward_with_gap(
                config.grid_side, config.gamma, delta, kGapRelTol, st, kGapSearchAttempts);
            TabularMdp task = with_state_rewards(make_empty_grid(config.grid_side, config.gamma),
                                                 found.reward);
            if (config.epsilon_mode == EpsilonMode::perturbation)
                exact.push_back(value_iteration(task, kExactSolveEpsilon).table);
            tasks.push_back(std::move(task));
            task_seeds.push_back(st);
        }

        for (std::size_t ei = 0; ei < multipliers.size(); ++ei) {
            double epsilon = multipliers[ei] * critical;
            std::vector<double> acc(static_cast<std::size_t>(config.tasks_per_delta));
            for (int ti = 0; ti < config.tasks_per_delta; ++ti) {
                const TabularMdp& task = tasks[static_cast<std::size_t>(ti)];
                ValueTable table = [&] {
                    if (config.epsilon_mode == EpsilonMode::iteration_truncation)
                        return value_iteration(task, epsilon).table;
                    std::uint64_t noise_seed =
                        mix_seed(task_seeds[static_cast<std::size_t>(ti)], ei + 1, 1);
                    return perturb_values(exact[static_cast<std::size_t>(ti)], epsilon,
                                          PerturbMode::uniform, noise_seed);
                }();
                acc[static_cast<std::size_t>(ti)] =
                    model_accuracy(infer_model(table, task), task);
            }
            detail::MeanSe stats = detail::mean_and_standard_error(acc);
            out.push_back(CurvePoint{delta, epsilon, stats.mean, stats.se, critical});
        }
    }
    return out;
}

/// CSV emission, rows sorted by (delta, epsilon), reals at 17 significant
/// digits; re-emitting the same points is byte-identical.
inline void emit_csv(std::ostream& os, std::span<const CurvePoint> points) {
    std::vector<CurvePoint> rows(points.begin(), points.end());
    std::sort(rows.begin(), rows.end(), [](const CurvePoint& a, const CurvePoint& b) {
        if (a.delta_target != b.delta_target) return a.delta_target < b.delta_target;
        return a.epsilon < b.epsilon;
    });
    os << "delta,epsilon,mean_accuracy,standard_error,critical_epsilon\n";
    for (const CurvePoint& p : rows)
        os << format_real17(p.delta_target) << ',' << format_real17(p.epsilon) << ','
           << format_real17(p.mean_accuracy) << ',' << format_real17(p.standard_error) << ','
           << format_real17(p.critical_epsilon) << '\n';
}

struct ContinuousSweepConfig {
    std::vector<double> gammas = {0.5, 0.9, 0.99};
    std::vector<double> slope_floors = {0.5, 1.0, 2.0};
    std::vector<double> epsilons = {0.0, 0.001, 0.01, 0.1};
    int trials_per_cell = 50;
    int num_segments = 16;
    int num_queries = 32;
    std::uint64_t base_seed = 1;
};

inline void validate(const ContinuousSweepConfig& c) {
    if (c.gammas.empty() || c.slope_floors.empty() || c.epsilons.empty())
        throw ValidationError("continuous config: parameter grids must be non-empty");
    for (double g : c.gammas)
        if (!(g > 0.0 && g < 1.0))
            throw ValidationError("continuous config: gammas must lie in (0, 1)");
    for (double L : c.slope_floors)
        if (!(L > 0.0) || !std::isfinite(L))
            throw ValidationError("continuous config: slope floors must be positive");
    for (double e : c.epsilons)
        if (!(e >= 0.0) || !std::isfinite(e))
            throw ValidationError("continuous config: epsilons must be >= 0");
    if (c.trials_per_cell < 1)
        throw ValidationError("continuous config: trials_per_cell must be >= 1");
    if (c.num_segments < 1)
        throw ValidationError("continuous config: num_segments must be >= 1");
    if (c.num_queries < 1)
        throw ValidationError("continuous config: num_queries must be >= 1");
}

struct SweepSummary {
    std::vector<ContinuousTrialReport> trials;
    std::uint64_t violations = 0;
};

/// Full grid of successor-error-bound trials: every (gamma, L, epsilon) cell
/// runs trials_per_cell independently seeded trials.
inline SweepSummary run_continuous_sweep(const ContinuousSweepConfig& config) {
    validate(config);
    SweepSummary summary;
    std::uint64_t cell = 0;
    for (double gamma : config.gammas)
        for (double L : config.slope_floors)
            for (double epsilon : config.epsilons) {
                for (int t = 0; t < config.trials_per_cell; ++t) {
                    std::uint64_t seed =
                        mix_seed(config.base_seed, cell, static_cast<std::uint64_t>(t));
                    ContinuousTrialReport r = run_continuous_trial(
                        config.num_segments, L, epsilon, gamma, config.num_queries, seed);
                    if (r.violated) ++summary.violations;
                    summary.trials.push_back(r);
                }
                ++cell;
            }
    return summary;
}

// ---- Flat key/value config files -------------------------------------------
// One "key value..." line per field, '#' comments and blank lines ignored.
// Unknown or repeated keys are rejected so typos fail loudly.

namespace detail {

struct ConfigDoc {
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;

    static ConfigDoc parse(std::string_view text, std::span<const std::string_view> known) {
        ConfigDoc doc;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = trim(text.substr(pos, end - pos));
            pos = end + 1;
            if (line.empty() || line[0] == '#') continue;
            std::vector<std::string_view> fields = split_fields(line);
            std::string key(fields[0]);
            if (std::find(known.begin(), known.end(), fields[0]) == known.end())
                throw ValidationError("config: unknown key '" + key + "'");
            for (const auto& e : doc.entries)
                if (e.first == key) throw ValidationError("config: repeated key '" + key + "'");
            std::vector<std::string> values;
            for (std::size_t i = 1; i < fields.size(); ++i) values.emplace_back(fields[i]);
            doc.entries.emplace_back(std::move(key), std::move(values));
        }
        return doc;
    }

    const std::vector<std::string>* find(std::string_view key) const {
        for (const auto& e : entries)
            if (e.first == key) return &e.second;
        return nullptr;
    }

    static const std::string& single(const std::vector<std::string>& values,
                                     std::string_view key) {
        if (values.size() != 1)
            throw ValidationError("config: key '" + std::string(key) +
                                  "' takes exactly one value");
        return values[0];
    }

    static std::vector<double> reals(const std::vector<std::string>& values,
                                     std::string_view key) {
        if (values.empty())
            throw ValidationError("config: key '" + std::string(key) + "' needs values");
        std::vector<double> out;
        for (const std::string& v : values) out.push_back(parse_real(v));
        return out;
    }
};

} // namespace detail

inline Fig1Config parse_fig1_config(std::string_view text) {
    using detail::ConfigDoc;
    static constexpr std::string_view known[] = {
        "grid_side",       "gamma",     "delta_targets", "epsilon_sweep",
        "tasks_per_delta", "base_seed", "epsilon_mode"};
    ConfigDoc doc = ConfigDoc::parse(text, known);
    Fig1Config c;
    if (const auto* v = doc.find("grid_side"))
        c.grid_side = static_cast<int>(parse_int(ConfigDoc::single(*v, "grid_side")));
    if (const auto* v = doc.find("gamma")) c.gamma = parse_real(ConfigDoc::single(*v, "gamma"));
    if (const auto* v = doc.find("delta_targets")) c.delta_targets = ConfigDoc::reals(*v, "delta_targets");
    if (const auto* v = doc.find("epsilon_sweep")) c.epsilon_sweep = ConfigDoc::reals(*v, "epsilon_sweep");
    if (const auto* v = doc.find("tasks_per_delta"))
        c.tasks_per_delta = static_cast<int>(parse_int(ConfigDoc::single(*v, "tasks_per_delta")));
    if (const auto* v = doc.find("base_seed"))
        c.base_seed = static_cast<std::uint64_t>(parse_int(ConfigDoc::single(*v, "base_seed")));
    if (const auto* v = doc.find("epsilon_mode"))
        c.epsilon_mode = epsilon_mode_from_string(ConfigDoc::single(*v, "epsilon_mode"));
    validate(c);
    return c;
}

inline ContinuousSweepConfig parse_continuous_config(std::string_view text) {
    using detail::ConfigDoc;
    static constexpr std::string_view known[] = {
        "gammas",       "slope_floors", "epsilons",  "trials_per_cell",
        "num_segments", "num_queries",  "base_seed"};
    ConfigDoc doc = ConfigDoc::parse(text, known);
    ContinuousSweepConfig c;
    if (const auto* v = doc.find("gammas")) c.gammas = ConfigDoc::reals(*v, "gammas");
    if (const auto* v = doc.find("slope_floors")) c.slope_floors = ConfigDoc::reals(*v, "slope_floors");
    if (const auto* v = doc.find("epsilons")) c.epsilons = ConfigDoc::reals(*v, "epsilons");
    if (const auto* v = doc.find("trials_per_cell"))
        c.trials_per_cell = static_cast<int>(parse_int(ConfigDoc::single(*v, "trials_per_cell")));
    if (const auto* v = doc.find("num_segments"))
        c.num_segments = static_cast<int>(parse_int(ConfigDoc::single(*v, "num_segments")));
    if (const auto* v = doc.find("num_queries"))
        c.num_queries = static_cast<int>(parse_int(ConfigDoc::single(*v, "num_queries")));
    if (const auto* v = doc.find("base_seed"))
        c.base_seed = static_cast<std::uint64_t>(parse_int(ConfigDoc::single(*v, "base_seed")));
    validate(c);
    return c;
}

// ---- Chart emission ---------------------------------------------------------

namespace detail {

inline std::string svg_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

inline std::string short_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

} // namespace detail

/// Flat SVG line chart of the accuracy curves: log-scaled epsilon on x,
/// accuracy on y, one polyline per delta target and a dashed vertical line at
/// each critical epsilon. The CSV stays the artifact of record.
inline void write_fig1_svg(std::ostream& os, std::span<const CurvePoint> points) {
    if (points.empty()) throw ValidationError("write_fig1_svg: no points");
    std::vector<CurvePoint> rows(points.begin(), points.end());
    std::sort(rows.begin(), rows.end(), [](const CurvePoint& a, const CurvePoint& b) {
        if (a.delta_target != b.delta_target) return a.delta_target < b.delta_target;
        return a.epsilon < b.epsilon;
    });

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const CurvePoint& p : rows) {
        lo = std::min({lo, p.epsilon, p.critical_epsilon});
        hi = std::max({hi, p.epsilon, p.critical_epsilon});
    }
    double xlo = std::log10(lo) - 0.1, xhi = std::log10(hi) + 0.1;

    const double W = 720, H = 480, ml = 64, mr = 180, mt = 40, mb = 56;
    auto px = [&](double eps) {
        return ml + (std::log10(eps) - xlo) / (xhi - xlo) * (W - ml - mr);
    };
    auto py = [&](double acc) { return mt + (1.05 - acc) / 1.05 * (H - mt - mb); };
    using detail::svg_num;
    using detail::short_num;

    static const char* colors[] = {"#1f6f8b", "#c05746", "#5c8a3c", "#7b5aa6", "#b08b2e"};

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << svg_num(ml) << "\" y=\"24\" font-size=\"15\">"
       << "successor recovery accuracy vs value-table accuracy</text>\n";

    for (double acc : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        os << "<line x1=\"" << svg_num(ml) << "\" y1=\"" << svg_num(py(acc)) << "\" x2=\""
           << svg_num(W - mr) << "\" y2=\"" << svg_num(py(acc))
           << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << svg_num(ml - 8) << "\" y=\"" << svg_num(py(acc) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << short_num(acc) << "</text>\n";
    }
    for (int e = static_cast<int>(std::ceil(xlo)); e <= static_cast<int>(std::floor(xhi)); ++e) {
        double x = ml + (e - xlo) / (xhi - xlo) * (W - ml - mr);
        os << "<line x1=\"" << svg_num(x) << "\" y1=\"" << svg_num(py(0)) << "\" x2=\""
           << svg_num(x) << "\" y2=\"" << svg_num(py(0) + 5)
           << "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << svg_num(x) << "\" y=\"" << svg_num(py(0) + 20)
           << "\" font-size=\"11\" text-anchor=\"middle\">1e" << e << "</text>\n";
    }
    os << "<text x=\"" << svg_num((ml + W - mr) / 2) << "\" y=\"" << svg_num(H - 12)
       << "\" font-size=\"12\" text-anchor=\"middle\">value-table accuracy epsilon</text>\n";
    os << "<text x=\"16\" y=\"" << svg_num((mt + H - mb) / 2)
       << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << svg_num((mt + H - mb) / 2) << ")\">mean model accuracy</text>\n";
    os << "<line x1=\"" << svg_num(ml) << "\" y1=\"" << svg_num(mt) << "\" x2=\"" << svg_num(ml)
       << "\" y2=\"" << svg_num(py(0)) << "\" stroke=\"#444444\"/>\n";
    os << "<line x1=\"" << svg_num(ml) << "\" y1=\"" << svg_num(py(0)) << "\" x2=\""
       << svg_num(W - mr) << "\" y2=\"" << svg_num(py(0)) << "\" stroke=\"#444444\"/>\n";

    int curve = 0;
    for (std::size_t i = 0; i < rows.size();) {
        double delta = rows[i].delta_target;
        const char* color = colors[curve % 5];
        os << "<line x1=\"" << svg_num(px(rows[i].critical_epsilon)) << "\" y1=\""
           << svg_num(mt) << "\" x2=\"" << svg_num(px(rows[i].critical_epsilon)) << "\" y2=\""
           << svg_num(py(0)) << "\" stroke=\"" << color
           << "\" stroke-width=\"1\" stroke-dasharray=\"5 4\"/>\n";
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        std::size_t j = i;
        for (; j < rows.size() && rows[j].delta_target == delta; ++j)
            os << svg_num(px(rows[j].epsilon)) << ',' << svg_num(py(rows[j].mean_accuracy))
               << ' ';
        os << "\"/>\n";
        for (std::size_t k = i; k < j; ++k) {
            if (rows[k].standard_error <= 0.0) continue;
            double x = px(rows[k].epsilon);
            os << "<line x1=\"" << svg_num(x) << "\" y1=\""
               << svg_num(py(rows[k].mean_accuracy - rows[k].standard_error)) << "\" x2=\""
               << svg_num(x) << "\" y2=\""
               << svg_num(py(rows[k].mean_accuracy + rows[k].standard_error)) << "\" stroke=\""
               << color << "\" stroke-width=\"1\"/>\n";
        }
        os << "<text x=\"" << svg_num(W - mr + 12) << "\" y=\"" << svg_num(mt + 16 + 18 * curve)
           << "\" font-size=\"12\" fill=\"" << color << "\">delta " << short_num(delta)
           << " (critical " << short_num(rows[i].critical_epsilon) << ")</text>\n";
        i = j;
        ++curve;
    }
    os << "</svg>\n";
}

} // namespace valdyn
