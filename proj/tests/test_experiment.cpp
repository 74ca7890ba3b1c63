#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "valdyn/experiment.hpp"
#include "valdyn/separability.hpp"

using namespace valdyn;

TEST_CASE("the default sweep spans a symmetric decade around critical", "[experiment]") {
    const std::vector<double>& sweep = default_epsilon_sweep();
    REQUIRE(sweep.size() == 12);
    CHECK(std::abs(sweep.front() - 0.1) < 1e-15);
    CHECK(std::abs(sweep.back() - 10.0) < 1e-13);
    for (std::size_t i = 1; i < sweep.size(); ++i) CHECK(sweep[i] > sweep[i - 1]);
    for (double m : sweep) CHECK(m > 0.0);
}

TEST_CASE("mean and standard error match hand-computed values", "[experiment]") {
    std::vector<double> xs{1.0, 2.0, 3.0};
    detail::MeanSe r = detail::mean_and_standard_error(xs);
    CHECK(r.mean == 2.0);
    CHECK(r.se == 0.5773502691896258); // stddev 1, divided by sqrt(3)

    std::vector<double> pair{1.0, 3.0};
    detail::MeanSe p = detail::mean_and_standard_error(pair);
    CHECK(p.mean == 2.0);
    CHECK(p.se == 1.0); // sqrt(2) / sqrt(2)

    std::vector<double> one{5.0};
    detail::MeanSe s = detail::mean_and_standard_error(one);
    CHECK(s.mean == 5.0);
    CHECK(s.se == 0.0);
}

TEST_CASE("accuracy-sweep configs reject out-of-range fields", "[experiment]") {
    CHECK_NOTHROW(validate(Fig1Config{}));

    Fig1Config c;
    c.grid_side = 1;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.gamma = 1.0;
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.delta_targets.clear();
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.delta_targets = {0.01, -0.01};
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.epsilon_sweep.clear();
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.epsilon_sweep = {0.5, 0.0};
    CHECK_THROWS_AS(validate(c), ValidationError);
    c = Fig1Config{};
    c.tasks_per_delta = 0;
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("accuracy-sweep config files parse with defaults for absent keys",
          "[experiment]") {
    Fig1Config d = parse_fig1_config("");
    CHECK(d.grid_side == 5);
    CHECK(d.gamma == 0.99);
    CHECK(d.delta_targets == std::vector<double>{0.005, 0.01, 0.02});
    CHECK(d.epsilon_sweep == default_epsilon_sweep());
    CHECK(d.tasks_per_delta == 20);
    CHECK(d.base_seed == 1);
    CHECK(d.epsilon_mode == EpsilonMode::iteration_truncation);

    Fig1Config c = parse_fig1_config("# accuracy sweep\n"
                                     "\n"
                                     "grid_side 4\n"
                                     "gamma 0.9\n"
                                     "delta_targets 0.01 0.02\n"
                                     "epsilon_sweep 0.5 1 2\n"
                                     "tasks_per_delta 3\n"
                                     "base_seed 42\n"
                                     "epsilon_mode perturbation\n");
    CHECK(c.grid_side == 4);
    CHECK(c.gamma == 0.9);
    CHECK(c.delta_targets == std::vector<double>{0.01, 0.02});
    CHECK(c.epsilon_sweep == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(c.tasks_per_delta == 3);
    CHECK(c.base_seed == 42);
    CHECK(c.epsilon_mode == EpsilonMode::perturbation);

    CHECK_THROWS_AS(parse_fig1_config("grid_sides 5\n"), ValidationError);
    CHECK_THROWS_AS(parse_fig1_config("gamma 0.9\ngamma 0.8\n"), ValidationError);
    CHECK_THROWS_AS(parse_fig1_config("gamma\n"), ValidationError);
    CHECK_THROWS_AS(parse_fig1_config("gamma 0.9 0.8\n"), ValidationError);
    CHECK_THROWS_AS(parse_fig1_config("epsilon_mode random\n"), ValidationError);
    CHECK_THROWS_AS(parse_fig1_config("tasks_per_delta 0\n"), ValidationError);
}

TEST_CASE("continuous sweep config files parse and validate", "[experiment]") {
    ContinuousSweepConfig d = parse_continuous_config("");
    CHECK(d.gammas == std::vector<double>{0.5, 0.9, 0.99});
    CHECK(d.slope_floors == std::vector<double>{0.5, 1.0, 2.0});
    CHECK(d.epsilons == std::vector<double>{0.0, 0.001, 0.01, 0.1});
    CHECK(d.trials_per_cell == 50);
    CHECK(d.num_segments == 16);
    CHECK(d.num_queries == 32);

    ContinuousSweepConfig c = parse_continuous_config("gammas 0.5\n"
                                                      "slope_floors 1\n"
                                                      "epsilons 0 0.01\n"
                                                      "trials_per_cell 2\n"
                                                      "num_segments 8\n"
                                                      "num_queries 4\n"
                                                      "base_seed 9\n");
    CHECK(c.gammas == std::vector<double>{0.5});
    CHECK(c.epsilons == std::vector<double>{0.0, 0.01});
    CHECK(c.base_seed == 9);

    CHECK_THROWS_AS(parse_continuous_config("gamma 0.5\n"), ValidationError);
    CHECK_THROWS_AS(parse_continuous_config("gammas 1.5\n"), ValidationError);
    CHECK_THROWS_AS(parse_continuous_config("epsilons -0.1\n"), ValidationError);
    CHECK_THROWS_AS(parse_continuous_config("trials_per_cell 0\n"), ValidationError);
}

TEST_CASE("curve CSV emission is sorted and byte-stable", "[experiment]") {
    std::vector<CurvePoint> points{
        CurvePoint{0.25, 0.5, 1.0, 0.0, 0.0625},
        CurvePoint{0.125, 2.0, 0.5, 0.0, 0.0625},
        CurvePoint{0.25, 0.25, 0.75, 0.125, 0.0625},
    };
    std::ostringstream os;
    emit_csv(os, points);
    std::string expected =
        "delta,epsilon,mean_accuracy,standard_error,critical_epsilon\n"
        "1.2500000000000000e-01,2.0000000000000000e+00,5.0000000000000000e-01,"
        "0.0000000000000000e+00,6.2500000000000000e-02\n"
        "2.5000000000000000e-01,2.5000000000000000e-01,7.5000000000000000e-01,"
        "1.2500000000000000e-01,6.2500000000000000e-02\n"
        "2.5000000000000000e-01,5.0000000000000000e-01,1.0000000000000000e+00,"
        "0.0000000000000000e+00,6.2500000000000000e-02\n";
    CHECK(os.str() == expected);

    std::ostringstream again;
    emit_csv(again, points);
    CHECK(again.str() == os.str());
}

TEST_CASE("a small accuracy sweep recovers perfectly below critical", "[experiment][slow]") {
    Fig1Config config;
    config.grid_side = 5;
    config.gamma = 0.99;
    config.delta_targets = {0.01};
    config.epsilon_sweep = {4.0, 0.25}; // deliberately unsorted
    config.tasks_per_delta = 2;
    config.base_seed = 11;

    for (EpsilonMode mode : {EpsilonMode::iteration_truncation, EpsilonMode::perturbation}) {
        config.epsilon_mode = mode;
        std::vector<CurvePoint> points = run_fig1(config);
        REQUIRE(points.size() == 2);

        double critical = identifiability_threshold(0.01, 0.99);
        CHECK(points[0].delta_target == 0.01);
        CHECK(points[0].critical_epsilon == critical);
        CHECK(points[0].epsilon == 0.25 * critical); // sorted ascending
        CHECK(points[1].epsilon == 4.0 * critical);

        // Below the threshold recovery is exact for every task, so the mean
        // is exactly one with zero spread.
        CHECK(points[0].mean_accuracy == 1.0);
        CHECK(points[0].standard_error == 0.0);
        CHECK(points[1].mean_accuracy <= 1.0);
        CHECK(points[1].mean_accuracy >= 0.0);

        std::vector<CurvePoint> rerun = run_fig1(config);
        REQUIRE(rerun.size() == points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            CHECK(rerun[i].epsilon == points[i].epsilon);
            CHECK(rerun[i].mean_accuracy == points[i].mean_accuracy);
            CHECK(rerun[i].standard_error == points[i].standard_error);
        }
    }
}

TEST_CASE("the continuous sweep covers the parameter grid without violations",
          "[experiment]") {
    ContinuousSweepConfig config;
    config.gammas = {0.9};
    config.slope_floors = {1.0};
    config.epsilons = {0.0, 0.01};
    config.trials_per_cell = 3;
    config.num_segments = 8;
    config.num_queries = 8;
    config.base_seed = 5;

    SweepSummary summary = run_continuous_sweep(config);
    REQUIRE(summary.trials.size() == 6);
    CHECK(summary.violations == 0);
    for (const ContinuousTrialReport& r : summary.trials) {
        CHECK_FALSE(r.violated);
        CHECK(r.gamma == 0.9);
        CHECK(r.requested_L == 1.0);
    }
    CHECK(summary.trials[0].epsilon == 0.0);
    CHECK(summary.trials[3].epsilon == 0.01);

    SweepSummary again = run_continuous_sweep(config);
    for (std::size_t i = 0; i < summary.trials.size(); ++i)
        CHECK(again.trials[i].max_observed_error == summary.trials[i].max_observed_error);

    ContinuousSweepConfig bad = config;
    bad.gammas.clear();
    CHECK_THROWS_AS(run_continuous_sweep(bad), ValidationError);
}

TEST_CASE("the accuracy chart renders one curve per separability target", "[experiment]") {
    std::vector<CurvePoint> points{
        CurvePoint{0.25, 0.5, 1.0, 0.0, 0.0625},
        CurvePoint{0.25, 0.25, 0.75, 0.125, 0.0625},
        CurvePoint{0.125, 2.0, 0.5, 0.01, 0.03125},
    };
    std::ostringstream os;
    write_fig1_svg(os, points);
    std::string svg = os.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);

    std::size_t curves = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++curves;
        pos += 9;
    }
    CHECK(curves == 2);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("delta 0.25") != std::string::npos);
    CHECK(svg.find("delta 0.125") != std::string::npos);

    CHECK_THROWS_AS(write_fig1_svg(os, std::vector<CurvePoint>{}), ValidationError);
}
