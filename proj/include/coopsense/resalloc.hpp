#pragma once

#include <map>
#include <utility>
#include <vector>

#include "coopsense/netmodel.hpp"

namespace coopsense::resalloc {

/// One active transfer: the time the payload needs at full bandwidth.
struct LinkSpec {
    int src = 0;
    int dst = 0;
    double full_band_time = 0.0;  ///< seconds, rho / (B * log2(1 + snr))
};

/// One demand-bearing node: the time its workload needs at full processor use.
struct NodeSpec {
    int id = 0;
    double full_compute_time = 0.0;  ///< seconds, mu / f
    double f = 0.0;                  ///< Hz
};

/// The continuous allocation problem left once selection and placement are
/// fixed: pick per-link bandwidth shares and per-node compute fractions,
/// minimize omega * sum(beta) + (1-omega) * sum(alpha*f)/total_f subject to the
/// deadline on every transfer-plus-compute chain and sum(beta) <= 1.
struct ActiveProblem {
    std::vector<LinkSpec> links;
    std::vector<NodeSpec> nodes;
    double omega = 0.5;
    double T = 0.02;
    double total_f = 0.0;
};

struct AllocationResult {
    bool feasible = false;
    std::map<int, double> alpha;                    ///< per demand-bearing node
    std::map<std::pair<int, int>, double> beta;     ///< per active link
    double cost = 0.0;

    double beta_sum() const;
};

/// Collapses a concrete assignment into its ActiveProblem.
ActiveProblem build_problem(const netmodel::TaskContext& ctx, const netmodel::Assignment& a);

/// Exact feasibility test: every demand fits its deadline at full processor
/// use and the minimum total bandwidth (all alpha at 1, delays tight) fits in
/// the band.
bool feasibility(const ActiveProblem& problem);

/// Minimizes the allocation cost. Bandwidth shares are eliminated through the
/// tight deadline (beta = C_link / (T - C_node/alpha)), which leaves one convex
/// scalar problem per node coupled only by the band budget; that coupling is
/// priced by a bisected multiplier and each scalar problem is solved by
/// golden-section search. Infeasible problems return feasible=false.
AllocationResult solve_allocation(const ActiveProblem& problem);

/// Independent reference: exhaustive grid search over the per-node compute
/// fractions with bandwidth shares tight, refined by re-gridding around the
/// incumbent. Only meant for small problems (<= 3 linked nodes).
AllocationResult grid_search_reference(const ActiveProblem& problem, int grid_steps,
                                       int refine_rounds = 8);

}  // namespace coopsense::resalloc
