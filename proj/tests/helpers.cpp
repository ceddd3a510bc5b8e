#include "helpers.hpp"

#include <map>

namespace testutil {

using namespace coopsense;

const accuracy::MlpModel& shared_model(int K) {
    static std::map<int, accuracy::MlpModel> models;
    auto it = models.find(K);
    if (it == models.end()) {
        const auto data =
            accuracy::generate_training_set(1, 5600, quality::PartitionResolution(K));
        it = models.emplace(K, accuracy::train_mlp(data, accuracy::TrainConfig{})).first;
    }
    return it->second;
}

scene::Scenario tiny_scenario() {
    scene::Scenario s;
    s.ground_z = 0.0;
    s.lidar = scene::default_lidar();
    s.rsu_position = {8.0, 11.0, 6.0};
    s.roi = {{8.0, 4.0, 2.1}, {16.0, 10.0, 4.2}};
    s.cavs.push_back({0, {2.0, 2.0, 1.9}, {{2.0, 2.0, 0.8}, {4.6, 1.8, 1.6}}});
    s.cavs.push_back({1, {14.0, 6.0, 1.9}, {{14.0, 6.0, 0.8}, {4.6, 1.8, 1.6}}});
    s.objects.push_back({0, scene::ObjectClass::car, {{8.0, 4.0, 0.75}, {4.5, 1.8, 1.5}}});
    s.objects.push_back({1, scene::ObjectClass::cyclist, {{11.0, 2.0, 0.85}, {1.8, 0.6, 1.7}}});
    return s;
}

netmodel::TaskContext make_context(const scene::Scenario& s, const accuracy::MlpModel& model,
                                   int K) {
    return netmodel::build_context(s, netmodel::SystemParams{},
                                   quality::PartitionResolution(K), &model);
}

}  // namespace testutil
