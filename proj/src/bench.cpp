#include "coopsense/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace coopsense::bench {

namespace {

/// Fills the shared diagnostics of a result whose assignment is already set.
void finish(SchemeResult& r, const netmodel::TaskContext& ctx, double requirement) {
    r.topology_ok = netmodel::validate_topology(r.assignment, ctx.point_counts).empty();
    const int M = ctx.num_objects();
    r.accuracy_estimate.resize(M);
    r.accuracy_oracle.resize(M);
    r.accuracy_ok = true;
    for (int m = 0; m < M; ++m) {
        std::uint32_t mask = 0;
        for (int n = 0; n < ctx.num_cavs; ++n)
            if (r.assignment.selection[n][m]) mask |= 1u << n;
        r.accuracy_estimate[m] = netmodel::predicted_accuracy(ctx, m, mask);
        r.accuracy_oracle[m] = netmodel::measured_accuracy(ctx, m, mask);
        if (r.accuracy_estimate[m] < requirement) r.accuracy_ok = false;
    }
    if (r.alloc.feasible) {
        r.bandwidth_fraction = r.alloc.beta_sum();
        double used = 0.0;
        for (const auto& [node, alpha] : r.alloc.alpha) used += alpha * ctx.params.f(node, ctx.num_cavs);
        r.compute_fraction = used / ctx.params.total_f(ctx.num_cavs);
    }
}

netmodel::Assignment subset_assignment(const netmodel::TaskContext& ctx, std::uint32_t members) {
    const int M = ctx.num_objects();
    auto a = netmodel::Assignment::empty(ctx.num_cavs, M);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < ctx.num_cavs; ++n)
            if ((members & (1u << n)) && ctx.available(n, m)) a.selection[n][m] = 1;
        a.placement[ctx.rsu_node()][m] = 1;
    }
    return a;
}

SchemeResult evaluate_fixed(const std::string& name, const netmodel::TaskContext& ctx,
                            netmodel::Assignment a, double requirement) {
    SchemeResult r;
    r.scheme = name;
    r.assignment = std::move(a);
    finish(r, ctx, requirement);
    if (r.topology_ok && r.accuracy_ok)
        r.alloc = resalloc::solve_allocation(resalloc::build_problem(ctx, r.assignment));
    if (r.alloc.feasible) finish(r, ctx, requirement);  // refresh the fractions
    r.feasible = r.topology_ok && r.accuracy_ok && r.alloc.feasible;
    return r;
}

ga::Genome to_genome(const netmodel::Assignment& a) {
    const int M = static_cast<int>(a.selection.empty() ? 0 : a.selection.front().size());
    const int N = static_cast<int>(a.selection.size());
    ga::Genome genes(M);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n)
            if (a.selection[n][m]) genes[m].selection |= 1u << n;
        genes[m].placement = a.placed_node(m);
    }
    return genes;
}

SchemeResult from_ga(const std::string& name, const netmodel::TaskContext& ctx,
                     double requirement, const std::vector<int>& allowed_nodes,
                     const ga::GaConfig& cfg, const std::vector<ga::Genome>& warm_starts) {
    SchemeResult r;
    r.scheme = name;
    ga::SearchSpace space;
    space.ctx = &ctx;
    space.requirement = requirement;
    space.allowed_nodes = allowed_nodes;
    try {
        const auto ga_result = ga::run(space, cfg, warm_starts);
        r.assignment = ga::to_assignment(ga_result.best.genes, ctx);
        r.alloc = ga_result.alloc;
        r.elite_history = ga_result.elite_history;
        finish(r, ctx, requirement);
        r.feasible = r.topology_ok && r.accuracy_ok && r.alloc.feasible;
    } catch (const ga::InitError&) {
        r.assignment = netmodel::Assignment::empty(ctx.num_cavs, ctx.num_objects());
        r.feasible = false;
    }
    return r;
}

}  // namespace

SchemeResult scheme_all(const netmodel::TaskContext& ctx, double requirement) {
    const std::uint32_t everyone = (1u << ctx.num_cavs) - 1;
    return evaluate_fixed("all", ctx, subset_assignment(ctx, everyone), requirement);
}

SchemeResult scheme_unified(const netmodel::TaskContext& ctx, double requirement) {
    SchemeResult best;
    best.scheme = "unified";
    best.assignment = netmodel::Assignment::empty(ctx.num_cavs, ctx.num_objects());
    double best_cost = std::numeric_limits<double>::infinity();
    const std::uint32_t limit = 1u << ctx.num_cavs;
    for (std::uint32_t members = 1; members < limit; ++members) {
        auto r = evaluate_fixed("unified", ctx, subset_assignment(ctx, members), requirement);
        if (r.feasible && r.alloc.cost < best_cost) {
            best_cost = r.alloc.cost;
            best = std::move(r);
        }
    }
    if (!std::isfinite(best_cost)) finish(best, ctx, requirement);  // keep diagnostics populated
    return best;
}

SchemeResult scheme_nearest(const netmodel::TaskContext& ctx, double requirement) {
    const int M = ctx.num_objects();
    auto a = netmodel::Assignment::empty(ctx.num_cavs, M);

    std::vector<int> owner(M, -1);
    for (int m = 0; m < M; ++m) {
        double best = std::numeric_limits<double>::infinity();
        for (int n = 0; n < ctx.num_cavs; ++n) {
            const double d = scene::distance(ctx.sensor_origins[n], ctx.objects[m].box.center);
            if (d < best) {
                best = d;
                owner[m] = n;
            }
        }
        if (ctx.available(owner[m], m)) a.selection[owner[m]][m] = 1;
    }

    // run locally while the accumulated demand fits the deadline, overflow to
    // the edge server
    std::vector<double> local_time(ctx.num_cavs, 0.0);
    for (int m = 0; m < M; ++m) {
        const int n = owner[m];
        const double extra =
            ctx.params.epsilon * ctx.point_counts[n][m] / ctx.params.f(n, ctx.num_cavs);
        if (local_time[n] + extra <= ctx.params.T) {
            local_time[n] += extra;
            a.placement[n][m] = 1;
        } else {
            a.placement[ctx.rsu_node()][m] = 1;
        }
    }

    auto r = evaluate_fixed("nearest", ctx, std::move(a), requirement);
    r.enforces_accuracy = false;
    // the scheme ignores the accuracy requirement, so only topology and the
    // deadline decide feasibility
    if (r.topology_ok && !r.alloc.feasible && !r.accuracy_ok) {
        r.alloc = resalloc::solve_allocation(resalloc::build_problem(ctx, r.assignment));
        if (r.alloc.feasible) finish(r, ctx, requirement);
    }
    r.feasible = r.topology_ok && r.alloc.feasible;
    return r;
}

SchemeResult scheme_centralized(const netmodel::TaskContext& ctx, double requirement,
                                const ga::GaConfig& cfg,
                                const std::vector<ga::Genome>& warm_starts) {
    return from_ga("centralized", ctx, requirement, {ctx.rsu_node()}, cfg, warm_starts);
}

SchemeResult scheme_proposed(const netmodel::TaskContext& ctx, double requirement,
                             const ga::GaConfig& cfg,
                             const std::vector<ga::Genome>& warm_starts) {
    return from_ga("proposed", ctx, requirement, {}, cfg, warm_starts);
}

std::vector<SchemeResult> compare_schemes(const netmodel::TaskContext& ctx, double requirement,
                                          const std::vector<std::string>& schemes,
                                          const ga::GaConfig& cfg) {
    auto wants = [&](const std::string& name) {
        return std::find(schemes.begin(), schemes.end(), name) != schemes.end();
    };
    std::vector<SchemeResult> results;
    std::vector<ga::Genome> centralized_seeds;
    std::vector<ga::Genome> proposed_seeds;

    auto seed_from = [](const SchemeResult& r) -> std::vector<ga::Genome> {
        if (!r.feasible) return {};
        const auto genes = to_genome(r.assignment);
        for (const auto& g : genes)
            if (g.selection == 0) return {};
        return {genes};
    };

    if (wants("all")) results.push_back(scheme_all(ctx, requirement));

    // the unified optimum also seeds the GA schemes: its constraint set is a
    // restriction of theirs, so elitism keeps them at least as cheap
    const bool need_unified = wants("unified") || wants("centralized") || wants("proposed");
    SchemeResult unified;
    if (need_unified) {
        unified = scheme_unified(ctx, requirement);
        const auto seeds = seed_from(unified);
        centralized_seeds.insert(centralized_seeds.end(), seeds.begin(), seeds.end());
        proposed_seeds.insert(proposed_seeds.end(), seeds.begin(), seeds.end());
        if (wants("unified")) results.push_back(unified);
    }

    if (wants("nearest")) results.push_back(scheme_nearest(ctx, requirement));

    const bool need_centralized = wants("centralized") || wants("proposed");
    if (need_centralized) {
        auto centralized = scheme_centralized(ctx, requirement, cfg, centralized_seeds);
        const auto seeds = seed_from(centralized);
        proposed_seeds.insert(proposed_seeds.end(), seeds.begin(), seeds.end());
        if (wants("centralized")) results.push_back(std::move(centralized));
    }

    if (wants("proposed"))
        results.push_back(scheme_proposed(ctx, requirement, cfg, proposed_seeds));
    return results;
}

}  // namespace coopsense::bench
