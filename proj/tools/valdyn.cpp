// Command-line front end: solve tabular MDPs, recover dynamics from value
// tables, measure separability, and run the two experiment batches.
// Exit codes: 0 success, 2 validation, 3 non-convergence or search failure,
// 4 I/O.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "valdyn/valdyn.hpp"

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw valdyn::IoError("cannot open for writing: " + path);
    return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw valdyn::IoError("write failure: " + path);
}

std::string slurp_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw valdyn::IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw valdyn::IoError("read failure: " + path);
    return buf.str();
}

void run_solve(const std::string& mdp_path, const std::string& out_path, double epsilon) {
    valdyn::TabularMdp mdp = valdyn::load_mdp(mdp_path);
    valdyn::SolveResult solved = valdyn::value_iteration(mdp, epsilon);
    valdyn::save_value_table(out_path, solved.table, mdp);
    std::cout << "iterations " << solved.report.iterations << '\n';
    std::cout << "final_residual " << valdyn::format_real17(solved.report.final_residual)
              << '\n';
    std::cout << "certified_epsilon "
              << valdyn::format_real17(solved.report.certified_epsilon) << '\n';
    std::cout << "wrote " << out_path << '\n';
}

void run_infer(const std::string& table_path, const std::string& out_path,
               const std::string& truth_path) {
    valdyn::StoredValueTable stored = valdyn::load_value_table(table_path);
    valdyn::InferredModel model =
        valdyn::infer_model(stored.table, stored.reward, stored.gamma);

    std::ofstream out = open_out(out_path);
    if (truth_path.empty()) {
        valdyn::write_model_table(out, model);
    } else {
        valdyn::TabularMdp truth = valdyn::load_mdp(truth_path);
        valdyn::write_model_table(out, model, &truth);
        std::cout << "accuracy " << valdyn::format_real17(valdyn::model_accuracy(model, truth))
                  << '\n';
    }
    finish_out(out, out_path);

    int ambiguous = 0;
    for (const valdyn::InferenceResult& r : model.per_pair)
        if (r.ambiguous) ++ambiguous;
    std::cout << "ambiguous_pairs " << ambiguous << '\n';
    std::cout << "wrote " << out_path << '\n';
}

void run_gap(const std::string& table_path) {
    valdyn::StoredValueTable stored = valdyn::load_value_table(table_path);
    std::vector<double> v = valdyn::greedy_state_values(stored.table);
    valdyn::SeparabilityReport report = valdyn::assess_separability(v, stored.gamma);
    std::cout << "delta " << valdyn::format_real17(report.delta) << '\n';
    std::cout << "argpair " << report.argpair.first << ' ' << report.argpair.second << '\n';
    if (report.threshold)
        std::cout << "identifiability_threshold " << valdyn::format_real17(*report.threshold)
                  << '\n';
}

void run_fig1(const std::string& config_path, const std::string& out_path,
              const std::string& svg_path) {
    valdyn::Fig1Config config = valdyn::parse_fig1_config(slurp_file(config_path));
    std::vector<valdyn::CurvePoint> points = valdyn::run_fig1(config);
    std::ofstream out = open_out(out_path);
    valdyn::emit_csv(out, points);
    finish_out(out, out_path);
    std::cout << "rows " << points.size() << '\n';
    std::cout << "wrote " << out_path << '\n';
    if (!svg_path.empty()) {
        std::ofstream svg = open_out(svg_path);
        valdyn::write_fig1_svg(svg, points);
        finish_out(svg, svg_path);
        std::cout << "wrote " << svg_path << '\n';
    }
}

void run_continuous(const std::string& config_path, const std::string& out_path) {
    valdyn::ContinuousSweepConfig config =
        valdyn::parse_continuous_config(slurp_file(config_path));
    valdyn::SweepSummary summary = valdyn::run_continuous_sweep(config);
    std::ofstream out = open_out(out_path);
    valdyn::write_trial_table(out, summary.trials);
    finish_out(out, out_path);
    std::cout << "trials " << summary.trials.size() << '\n';
    std::cout << "violations " << summary.violations << '\n';
    std::cout << "wrote " << out_path << '\n';
}

void run_make_grid(const std::string& out_path, int side, double gamma, std::uint64_t seed,
                   double target_delta, double rel_tol, std::uint64_t attempts,
                   const std::string& reward_doc_path) {
    valdyn::TabularMdp grid = valdyn::make_empty_grid(side, gamma);
    std::vector<double> reward;
    if (target_delta > 0.0) {
        valdyn::RewardSearchResult found =
            valdyn::find_reward_with_gap(side, gamma, target_delta, rel_tol, seed, attempts);
        std::cout << "achieved_delta " << valdyn::format_real17(found.achieved_delta) << '\n';
        std::cout << "attempts " << found.attempts << '\n';
        if (!reward_doc_path.empty()) {
            valdyn::RewardDocument doc{side,       gamma,          target_delta,
                                       found.achieved_delta,       found.seed,
                                       found.attempts,             found.reward};
            valdyn::save_reward_document(reward_doc_path, doc);
            std::cout << "wrote " << reward_doc_path << '\n';
        }
        reward = std::move(found.reward);
    } else {
        reward = valdyn::sample_reward(side, seed);
    }
    valdyn::save_mdp(out_path, valdyn::with_state_rewards(grid, reward));
    std::cout << "wrote " << out_path << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"recover deterministic dynamics from solved value tables"};
    app.require_subcommand(1);

    std::string mdp_path, table_path, out_path, truth_path, config_path, svg_path,
        reward_doc_path;
    double epsilon = 1e-12;
    int side = 5;
    double gamma = 0.99;
    std::uint64_t seed = 1;
    double target_delta = 0.0;
    double rel_tol = 0.01;
    std::uint64_t attempts = 20000;

    CLI::App* solve = app.add_subcommand("solve", "solve an MDP file to a value-table file");
    solve->add_option("mdp", mdp_path, "input MDP file")->required();
    solve->add_option("out", out_path, "output value-table file")->required();
    solve->add_option("--epsilon", epsilon, "target accuracy certificate (default 1e-12)");
    solve->callback([&] { run_solve(mdp_path, out_path, epsilon); });

    CLI::App* infer =
        app.add_subcommand("infer", "recover a dynamics model from a value-table file");
    infer->add_option("table", table_path, "input value-table file")->required();
    infer->add_option("out", out_path, "output model table")->required();
    infer->add_option("--truth", truth_path, "MDP file to compare predictions against");
    infer->callback([&] { run_infer(table_path, out_path, truth_path); });

    CLI::App* gap =
        app.add_subcommand("gap", "report the minimum state-value gap of a value table");
    gap->add_option("table", table_path, "input value-table file")->required();
    gap->callback([&] { run_gap(table_path); });

    CLI::App* fig1 =
        app.add_subcommand("fig1", "accuracy-vs-precision curves over separability targets");
    fig1->add_option("config", config_path, "flat key/value config file")->required();
    fig1->add_option("out", out_path, "output CSV")->required();
    fig1->add_option("--svg", svg_path, "also write a line chart");
    fig1->callback([&] { run_fig1(config_path, out_path, svg_path); });

    CLI::App* continuous =
        app.add_subcommand("continuous", "successor-error bound trials on [0, 1]");
    continuous->add_option("config", config_path, "flat key/value config file")->required();
    continuous->add_option("out", out_path, "output CSV")->required();
    continuous->callback([&] { run_continuous(config_path, out_path); });

    CLI::App* make_grid =
        app.add_subcommand("make-grid", "write an empty-grid MDP with sampled rewards");
    make_grid->add_option("out", out_path, "output MDP file")->required();
    make_grid->add_option("--side", side, "grid side length (default 5)");
    make_grid->add_option("--gamma", gamma, "discount factor (default 0.99)");
    make_grid->add_option("--seed", seed, "reward seed (default 1)");
    make_grid->add_option("--target-delta", target_delta,
                          "search for a reward whose value gap hits this target");
    make_grid->add_option("--rel-tol", rel_tol, "relative gap tolerance (default 0.01)");
    make_grid->add_option("--attempts", attempts, "search attempt cap (default 20000)");
    make_grid->add_option("--reward-doc", reward_doc_path,
                          "also write the accepted reward search result");
    make_grid->callback([&] {
        run_make_grid(out_path, side, gamma, seed, target_delta, rel_tol, attempts,
                      reward_doc_path);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const valdyn::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const valdyn::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const valdyn::GapSearchError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const valdyn::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
