#pragma once

// Shared fixtures: one production-grade estimator per resolution (trained once,
// reused by every test case) and a compact two-CAV scene for optimizer tests.

#include "coopsense/accuracy.hpp"
#include "coopsense/netmodel.hpp"
#include "coopsense/scene.hpp"

namespace testutil {

const coopsense::accuracy::MlpModel& shared_model(int K);

/// Two CAVs that both observe both objects (a car and a cyclist), plus an RSU.
coopsense::scene::Scenario tiny_scenario();

coopsense::netmodel::TaskContext make_context(const coopsense::scene::Scenario& s,
                                              const coopsense::accuracy::MlpModel& model,
                                              int K);

}  // namespace testutil
