#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "coopsense/experiment.hpp"
#include "helpers.hpp"

using namespace coopsense;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("the built-in scenario has the advertised cast") {
    const auto s = experiment::make_default_scenario(1);
    REQUIRE(s.cavs.size() == 4);
    REQUIRE(s.objects.size() == 6);

    using scene::ObjectClass;
    const ObjectClass expected[] = {ObjectClass::truck,      ObjectClass::car,
                                    ObjectClass::cyclist,    ObjectClass::pedestrian,
                                    ObjectClass::car,        ObjectClass::truck};
    for (int m = 0; m < 6; ++m) CHECK(s.objects[m].cls == expected[m]);

    const double cav_x[] = {2.0, 18.0, 30.0, 38.0};
    const double obj_x[] = {9.5, 26.0, 16.0, 47.0, 36.0, 45.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(s.cavs[i].body.center.x - cav_x[i]) <= 0.2);
        CHECK(s.cavs[i].sensor_origin.z >
              s.cavs[i].body.center.z + s.cavs[i].body.lengths.z / 2);
    }
    for (int m = 0; m < 6; ++m) {
        CHECK(std::abs(s.objects[m].box.center.x - obj_x[m]) <= 0.2);
        CHECK(s.objects[m].box.intersects(s.roi));
    }

    CHECK(scene::scenario_to_json(experiment::make_default_scenario(5)) ==
          scene::scenario_to_json(experiment::make_default_scenario(5)));
    CHECK(scene::scenario_to_json(experiment::make_default_scenario(5)) !=
          scene::scenario_to_json(experiment::make_default_scenario(6)));
}

TEST_CASE("config parsing honors every field") {
    const auto cfg = experiment::config_from_json(R"({
        "scenario": "sc.json",
        "seed": 9,
        "K": 2,
        "schemes": ["nearest", "proposed"],
        "epsilon": [15000, 25000],
        "accuracy_req": [0.7, 0.9],
        "out_dir": "outx",
        "train": true,
        "model": "m.json",
        "parallel": true,
        "timings": true,
        "params": {"omega": 0.25, "T": 0.04},
        "oracle": {"K_oracle": 3, "lambda": 0.2},
        "training": {"count": 100, "epochs": 10, "batch_size": 16,
                     "learning_rate": 0.05, "seed": 4},
        "ga": {"population": 10, "generations": 5, "p_crossover": 0.8,
               "p_mutation": 0.2, "seed": 6, "max_init_attempts": 500,
               "two_draw": true, "parallel": true}
    })");
    CHECK(cfg.scenario_path == "sc.json");
    CHECK(cfg.seed == 9);
    CHECK(cfg.K == 2);
    CHECK(cfg.schemes == std::vector<std::string>{"nearest", "proposed"});
    CHECK(cfg.epsilon == std::vector<double>{15000, 25000});
    CHECK(cfg.accuracy_req == std::vector<double>{0.7, 0.9});
    CHECK(cfg.out_dir == "outx");
    CHECK(cfg.train);
    CHECK(cfg.model_path == "m.json");
    CHECK(cfg.parallel);
    CHECK(cfg.timings);
    CHECK(cfg.has_params);
    CHECK(cfg.params.omega == 0.25);
    CHECK(cfg.params.T == 0.04);
    CHECK(cfg.params.B == 2e7);  // untouched fields keep their defaults
    CHECK(cfg.oracle.K_oracle == 3);
    CHECK(cfg.oracle.lambda == 0.2);
    CHECK(cfg.oracle.z_sat == 40.0);
    CHECK(cfg.training.count == 100);
    CHECK(cfg.training.train.epochs == 10);
    CHECK(cfg.training.train.batch_size == 16);
    CHECK(cfg.training.train.learning_rate == 0.05);
    CHECK(cfg.training.train.seed == 4);
    CHECK(cfg.ga.population == 10);
    CHECK(cfg.ga.generations == 5);
    CHECK(cfg.ga.p_crossover == 0.8);
    CHECK(cfg.ga.p_mutation == 0.2);
    CHECK(cfg.ga.seed == 6);
    CHECK(cfg.ga.max_init_attempts == 500);
    CHECK(cfg.ga.two_draw);
    CHECK(cfg.ga.parallel);

    const auto defaults = experiment::config_from_json("{}");
    CHECK_FALSE(defaults.has_params);
    CHECK(defaults.schemes.size() == 5);
    CHECK(defaults.epsilon == std::vector<double>{10000, 20000, 30000, 40000});
}

TEST_CASE("config parsing rejects what it cannot honor") {
    using experiment::config_from_json;
    CHECK_THROWS_WITH_AS(config_from_json(R"({"foo": 1})"),
                         doctest::Contains("unknown field 'foo'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"K": 9})"), doctest::Contains("'K'"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"K": "three"})"),
                         doctest::Contains("must be an integer"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"schemes": ["bogus"]})"),
                         doctest::Contains("unknown scheme 'bogus'"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"epsilon": [0]})"),
                         doctest::Contains("positive"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"accuracy_req": [1.5]})"),
                         doctest::Contains("[0,1]"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"ga": {"population": 1}})"),
                         doctest::Contains("ga.population"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"oracle": {"wat": 1}})"),
                         doctest::Contains("oracle.wat"), std::runtime_error);
    CHECK_THROWS_WITH_AS(config_from_json("{"), doctest::Contains("invalid JSON"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(experiment::load_config("no_such_config.json"),
                         doctest::Contains("no_such_config.json"), std::runtime_error);
}

TEST_CASE("result rows serialize exactly") {
    CHECK(experiment::results_csv_header() ==
          "scheme,epsilon,A,K,seed,feasible,total_cost,bandwidth_fraction,compute_fraction,"
          "accuracy_estimate,accuracy_oracle,elapsed_ms");

    experiment::ResultRow row;
    row.scheme = "nearest";
    row.epsilon = 30000;
    row.A = 0.9;
    row.K = 3;
    row.seed = 7;
    row.feasible = true;
    row.total_cost = 0.125;
    row.bandwidth_fraction = 0.0625;
    row.compute_fraction = 0.03125;
    row.accuracy_estimate = {0.25, 0.5};
    row.accuracy_oracle = {0.75, 1.0};
    CHECK(experiment::to_csv_row(row) ==
          "nearest,30000,0.9,3,7,1,0.125,0.0625,0.03125,0.25;0.5,0.75;1,0");

    experiment::ResultRow dead;
    dead.scheme = "unified";
    dead.epsilon = 10000;
    dead.A = 0.5;
    dead.K = 1;
    dead.seed = 2;
    dead.feasible = false;
    dead.total_cost = std::numeric_limits<double>::infinity();
    CHECK(experiment::to_csv_row(dead) == "unified,10000,0.5,1,2,0,inf,0,0,,,0");
}

TEST_CASE("a small sweep lands on disk byte for byte") {
    const std::string out = "exp_test_out";
    fs::remove_all(out);
    const std::string model_path = "exp_test_model.json";
    accuracy::save_model(testutil::shared_model(3), model_path);

    experiment::ExperimentConfig cfg;
    cfg.schemes = {"nearest"};
    cfg.epsilon = {30000};
    cfg.accuracy_req = {0.9};
    cfg.out_dir = out;
    cfg.model_path = model_path;

    const auto first = experiment::run_experiment(cfg);
    REQUIRE(first.rows.size() == 1);
    CHECK(first.rows[0].scheme == "nearest");
    CHECK(first.rows[0].K == 3);
    CHECK(first.rows[0].epsilon == 30000);
    CHECK(first.rows[0].elapsed_ms == 0);
    CHECK(first.rows[0].accuracy_estimate.size() == 6);
    REQUIRE(fs::exists(first.results_path));
    REQUIRE(fs::exists(first.summary_path));

    const auto csv = slurp(first.results_path);
    CHECK(csv == experiment::results_csv_header() + "\n" +
                     experiment::to_csv_row(first.rows[0]) + "\n");
    CHECK(slurp(first.summary_path).find("epsilon=30000") != std::string::npos);

    const auto second = experiment::run_experiment(cfg);
    CHECK(slurp(second.results_path) == csv);

    auto parallel_cfg = cfg;
    parallel_cfg.parallel = true;
    const auto third = experiment::run_experiment(parallel_cfg);
    CHECK(slurp(third.results_path) == csv);

    fs::remove_all(out);
    fs::remove(model_path);
}

TEST_CASE("a missing scenario file is named in the error") {
    experiment::ExperimentConfig cfg;
    cfg.scenario_path = "missing_scenario_xyz.json";
    cfg.out_dir = "exp_test_err";
    CHECK_THROWS_WITH_AS(experiment::run_experiment(cfg),
                         doctest::Contains("missing_scenario_xyz.json"), std::runtime_error);
    fs::remove_all("exp_test_err");
}
