#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopsense/accuracy.hpp"
#include "coopsense/ga.hpp"
#include "coopsense/netmodel.hpp"
#include "coopsense/scene.hpp"

namespace coopsense::experiment {

struct TrainingOptions {
    int count = 5600;
    accuracy::TrainConfig train;
};

struct ExperimentConfig {
    std::string scenario_path;  ///< empty: built-in default scenario
    std::uint64_t seed = 1;
    int K = 3;
    std::vector<std::string> schemes = {"all", "unified", "nearest", "centralized",
                                        "proposed"};
    std::vector<double> epsilon = {10000, 20000, 30000, 40000};
    std::vector<double> accuracy_req = {0.9};
    std::string out_dir = "results";
    bool train = false;
    std::string model_path;  ///< empty: <out_dir>/model.json
    bool parallel = false;
    bool timings = false;    ///< fill elapsed_ms with wall time (breaks reproducibility)
    bool has_params = false;  ///< config carried an explicit params block
    netmodel::SystemParams params;
    accuracy::OracleParams oracle;
    TrainingOptions training;
    ga::GaConfig ga;
};

/// Parses and validates a config file; unknown or ill-typed fields raise
/// std::runtime_error naming the offending field.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// One line of results.csv.
struct ResultRow {
    std::string scheme;
    double epsilon = 0.0;
    double A = 0.0;
    int K = 0;
    std::uint64_t seed = 0;
    bool feasible = false;
    double total_cost = 0.0;
    double bandwidth_fraction = 0.0;
    double compute_fraction = 0.0;
    std::vector<double> accuracy_estimate;  ///< per subtask
    std::vector<double> accuracy_oracle;    ///< per subtask
    std::int64_t elapsed_ms = 0;
};

std::string results_csv_header();
std::string to_csv_row(const ResultRow& row);

/// Four CAVs and six objects (two trucks, two cars, a pedestrian, a cyclist)
/// on a 50 m two-lane road, seeded jitter on all placements. Built so that
/// every object is well observed by at least one CAV while some objects are
/// hidden from their nearest CAV.
scene::Scenario make_default_scenario(std::uint64_t seed);

struct ExperimentOutput {
    std::vector<ResultRow> rows;
    std::string results_path;
    std::string summary_path;
    std::string model_path;
};

/// Runs the configured sweep: load or train the estimator, build the context
/// per scenario, execute every requested scheme at every (epsilon, A) pair,
/// re-verify each feasible allocation against the full constraint set and
/// write results.csv, per-run elite histories, the model and summary.txt into
/// out_dir. Output is byte-stable for a fixed config and seed.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace coopsense::experiment
