#pragma once

#include <string>
#include <vector>

#include "coopsense/ga.hpp"
#include "coopsense/netmodel.hpp"
#include "coopsense/resalloc.hpp"

namespace coopsense::bench {

struct SchemeResult {
    std::string scheme;
    netmodel::Assignment assignment;
    resalloc::AllocationResult alloc;
    bool topology_ok = false;
    bool accuracy_ok = false;           ///< every subtask meets the requirement (estimator)
    bool feasible = false;              ///< the scheme's own constraint set holds
    bool enforces_accuracy = true;      ///< false for schemes that only report it
    std::vector<double> accuracy_estimate;
    std::vector<double> accuracy_oracle;
    double bandwidth_fraction = 0.0;    ///< sum of beta
    double compute_fraction = 0.0;      ///< sum(alpha*f)/total_f
    std::vector<double> elite_history;  ///< populated by the GA-backed schemes
};

/// Every observed data set is used and everything runs on the edge server.
SchemeResult scheme_all(const netmodel::TaskContext& ctx, double requirement);

/// Best single CAV subset: enumerate all subsets, use the full data of the
/// subset members for every subtask, run on the edge server, keep the cheapest
/// subset that meets accuracy and the deadline.
SchemeResult scheme_unified(const netmodel::TaskContext& ctx, double requirement);

/// Each subtask uses only the data of the CAV closest to the object (sensor
/// origin to box center, ties to the lower index) and runs there when the
/// local deadline allows, otherwise on the edge server. Accuracy is reported,
/// not enforced.
SchemeResult scheme_nearest(const netmodel::TaskContext& ctx, double requirement);

/// The optimizer restricted to edge-server placement.
SchemeResult scheme_centralized(const netmodel::TaskContext& ctx, double requirement,
                                const ga::GaConfig& cfg,
                                const std::vector<ga::Genome>& warm_starts = {});

/// The full optimizer: per-subtask data selection and placement.
SchemeResult scheme_proposed(const netmodel::TaskContext& ctx, double requirement,
                             const ga::GaConfig& cfg,
                             const std::vector<ga::Genome>& warm_starts = {});

/// Runs the requested schemes on one context. GA-backed schemes are warm
/// started with the cheaper restricted solutions (unified seeds centralized,
/// centralized seeds proposed), which preserves the cost ordering the
/// restrictions imply.
std::vector<SchemeResult> compare_schemes(const netmodel::TaskContext& ctx,
                                          double requirement,
                                          const std::vector<std::string>& schemes,
                                          const ga::GaConfig& cfg);

}  // namespace coopsense::bench
