#include <cstdint>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coopsense/experiment.hpp"

namespace {

std::vector<std::string> split_list(const std::string& arg) {
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cooperative sensing and computing experiment runner"};

    std::string config_path, scenario_path, model_path, out_dir, scheme_arg;
    std::uint64_t seed = 0;
    int K = 0;
    std::vector<double> epsilon, accuracy_req;
    bool train = false, parallel = false, timings = false;

    auto* opt_config = app.add_option("--config", config_path, "experiment config JSON");
    auto* opt_scenario = app.add_option("--scenario", scenario_path, "scenario JSON");
    auto* opt_seed = app.add_option("--seed", seed, "master seed");
    auto* opt_scheme = app.add_option(
        "--scheme", scheme_arg,
        "comma list of schemes (all,unified,nearest,centralized,proposed); the single "
        "value 'all' selects every scheme");
    auto* opt_eps =
        app.add_option("--epsilon", epsilon, "computing demand per point, cycles (sweep list)")
            ->delimiter(',');
    auto* opt_req =
        app.add_option("--accuracy-req", accuracy_req, "accuracy requirement (sweep list)")
            ->delimiter(',');
    auto* opt_k = app.add_option("--K", K, "voxel resolution per axis (1..4)");
    auto* opt_train = app.add_flag("--train", train, "retrain the estimator");
    auto* opt_model = app.add_option("--model", model_path, "estimator model JSON");
    auto* opt_out = app.add_option("--out", out_dir, "output directory");
    auto* opt_parallel = app.add_flag("--parallel", parallel, "run sweep points concurrently");
    auto* opt_timings =
        app.add_flag("--timings", timings, "fill elapsed_ms (makes results.csv run-dependent)");

    CLI11_PARSE(app, argc, argv);

    try {
        coopsense::experiment::ExperimentConfig cfg;
        if (opt_config->count()) cfg = coopsense::experiment::load_config(config_path);
        if (opt_scenario->count()) cfg.scenario_path = scenario_path;
        if (opt_seed->count()) cfg.seed = seed;
        if (opt_scheme->count()) {
            if (scheme_arg == "all") {
                cfg.schemes = {"all", "unified", "nearest", "centralized", "proposed"};
            } else {
                cfg.schemes = split_list(scheme_arg);
                for (const auto& name : cfg.schemes) {
                    static const char* known[] = {"all", "unified", "nearest", "centralized",
                                                  "proposed"};
                    bool ok = false;
                    for (const char* k : known) ok = ok || name == k;
                    if (!ok) throw std::runtime_error("unknown scheme '" + name + "'");
                }
                if (cfg.schemes.empty()) throw std::runtime_error("--scheme list is empty");
            }
        }
        if (opt_eps->count()) {
            for (double e : epsilon)
                if (e <= 0.0) throw std::runtime_error("--epsilon entries must be positive");
            cfg.epsilon = epsilon;
        }
        if (opt_req->count()) {
            for (double a : accuracy_req)
                if (a < 0.0 || a > 1.0)
                    throw std::runtime_error("--accuracy-req entries must lie in [0,1]");
            cfg.accuracy_req = accuracy_req;
        }
        if (opt_k->count()) {
            if (K < 1 || K > 4) throw std::runtime_error("--K must lie in 1..4");
            cfg.K = K;
        }
        if (opt_train->count()) cfg.train = true;
        if (opt_model->count()) cfg.model_path = model_path;
        if (opt_out->count()) cfg.out_dir = out_dir;
        if (opt_parallel->count()) cfg.parallel = true;
        if (opt_timings->count()) cfg.timings = true;

        const auto out = coopsense::experiment::run_experiment(cfg);
        std::cout << "wrote " << out.results_path << " (" << out.rows.size() << " rows), "
                  << out.summary_path << ", model " << out.model_path << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
