#include "coopsense/resalloc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace coopsense::resalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One destination node together with its incoming transfers.
struct NodeGroup {
    int id = 0;
    double C = 0.0;  // full-processor compute time
    double f = 0.0;
    std::vector<double> link_times;       // full-band transfer times
    std::vector<std::size_t> link_index;  // into problem.links
};

struct ProblemView {
    std::vector<NodeGroup> linked;      // incoming links and C > 0: the real unknowns
    std::vector<NodeGroup> pass_through;  // incoming links, C == 0: alpha = 0, beta fixed
    std::vector<NodeGroup> local_only;  // demand but no incoming links: alpha = C/T
};

ProblemView split_problem(const ActiveProblem& p) {
    ProblemView v;
    std::map<int, NodeGroup> by_dst;
    for (const auto& node : p.nodes) {
        NodeGroup g;
        g.id = node.id;
        g.C = node.full_compute_time;
        g.f = node.f;
        by_dst[node.id] = g;
    }
    for (std::size_t i = 0; i < p.links.size(); ++i) {
        const auto& link = p.links[i];
        if (link.full_band_time <= 0.0) continue;  // nothing to send
        auto& g = by_dst[link.dst];  // creates a zero-demand group if absent
        g.id = link.dst;
        g.link_times.push_back(link.full_band_time);
        g.link_index.push_back(i);
    }
    for (auto& [id, g] : by_dst) {
        if (g.link_times.empty()) {
            if (g.C > 0.0) v.local_only.push_back(g);
        } else if (g.C > 0.0) {
            v.linked.push_back(g);
        } else {
            v.pass_through.push_back(g);
        }
    }
    return v;
}

/// Sum of tight bandwidth shares of one linked node at compute fraction alpha.
double band_demand(const NodeGroup& g, double alpha, double T) {
    const double window = T - g.C / alpha;
    if (window <= 0.0) return kInf;
    double s = 0.0;
    for (double c : g.link_times) s += c / window;
    return s;
}

double golden_section_min(const std::function<double(double)>& fn, double lo, double hi,
                          double tol) {
    constexpr double ratio = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = fn(d);
        }
    }
    return 0.5 * (a + b);
}

struct CandidateSolution {
    std::vector<double> alpha;  // per linked group
    double band = 0.0;          // total bandwidth, fixed shares included
    double cost = 0.0;
};

}  // namespace

double AllocationResult::beta_sum() const {
    double s = 0.0;
    for (const auto& [key, b] : beta) s += b;
    return s;
}

ActiveProblem build_problem(const netmodel::TaskContext& ctx, const netmodel::Assignment& a) {
    ActiveProblem p;
    p.omega = ctx.params.omega;
    p.T = ctx.params.T;
    p.total_f = ctx.params.total_f(ctx.num_cavs);

    const auto demand = netmodel::computing_demands(a, ctx.point_counts, ctx.params);
    const int N = ctx.num_cavs;
    for (int n = 0; n <= N; ++n)
        if (demand.per_node[n] > 0.0)
            p.nodes.push_back({n, demand.per_node[n] / ctx.params.f(n, N), ctx.params.f(n, N)});

    for (int src = 0; src < N; ++src)
        for (int dst = 0; dst <= N; ++dst) {
            if (src == dst) continue;
            const double rho = netmodel::link_load(a, ctx.point_counts, ctx.params, src, dst);
            if (rho <= 0.0) continue;
            const double full_rate = netmodel::transmission_rate(1.0, ctx.params, ctx.dist[src][dst]);
            p.links.push_back({src, dst, rho / full_rate});
        }
    return p;
}

bool feasibility(const ActiveProblem& problem) {
    const auto view = split_problem(problem);
    for (const auto& g : view.local_only)
        if (g.C > problem.T) return false;
    double min_band = 0.0;
    for (const auto& g : view.pass_through)
        for (double c : g.link_times) min_band += c / problem.T;
    for (const auto& g : view.linked) {
        if (g.C >= problem.T) return false;  // transfers need a positive compute window
        min_band += band_demand(g, 1.0, problem.T);
    }
    return min_band <= 1.0;
}

namespace {

AllocationResult assemble(const ActiveProblem& problem, const ProblemView& view,
                          const std::vector<double>& linked_alpha) {
    AllocationResult r;
    r.feasible = true;
    double band = 0.0;
    double weighted_compute = 0.0;

    for (const auto& g : view.pass_through) {
        r.alpha[g.id] = 0.0;
        for (std::size_t k = 0; k < g.link_times.size(); ++k) {
            const auto& link = problem.links[g.link_index[k]];
            const double b = g.link_times[k] / problem.T;
            r.beta[{link.src, link.dst}] = b;
            band += b;
        }
    }
    for (const auto& g : view.local_only) {
        const double a = g.C / problem.T;
        r.alpha[g.id] = a;
        weighted_compute += a * g.f;
    }
    for (std::size_t i = 0; i < view.linked.size(); ++i) {
        const auto& g = view.linked[i];
        const double a = linked_alpha[i];
        r.alpha[g.id] = a;
        weighted_compute += a * g.f;
        const double window = problem.T - g.C / a;
        for (std::size_t k = 0; k < g.link_times.size(); ++k) {
            const auto& link = problem.links[g.link_index[k]];
            const double b = g.link_times[k] / window;
            r.beta[{link.src, link.dst}] = b;
            band += b;
        }
    }
    r.cost = problem.omega * band +
             (1.0 - problem.omega) * (problem.total_f > 0.0 ? weighted_compute / problem.total_f : 0.0);
    return r;
}

}  // namespace

AllocationResult solve_allocation(const ActiveProblem& problem) {
    if (problem.T <= 0.0) throw std::invalid_argument("solve_allocation: deadline must be positive");
    AllocationResult infeasible;
    infeasible.feasible = false;
    infeasible.cost = kInf;
    if (!feasibility(problem)) return infeasible;

    const auto view = split_problem(problem);
    const double T = problem.T;
    const double omega = problem.omega;
    const double F = problem.total_f;

    // bandwidth already committed by nodes without compute demand
    double fixed_band = 0.0;
    for (const auto& g : view.pass_through)
        for (double c : g.link_times) fixed_band += c / T;

    const std::size_t D = view.linked.size();
    if (D == 0) {
        auto r = assemble(problem, view, {});
        if (r.beta_sum() > 1.0 + 1e-12) return infeasible;
        return r;
    }

    std::vector<double> lo(D);
    for (std::size_t i = 0; i < D; ++i)
        lo[i] = std::min(1.0, view.linked[i].C / T + 1e-12);

    // per-node minimizer of (omega + lam) * band(alpha) + (1-omega) * f * alpha / F
    auto alphas_for = [&](double lam) {
        std::vector<double> a(D);
        for (std::size_t i = 0; i < D; ++i) {
            const auto& g = view.linked[i];
            if (lo[i] >= 1.0) {
                a[i] = 1.0;
                continue;
            }
            auto fn = [&](double x) {
                return (omega + lam) * band_demand(g, x, T) + (1.0 - omega) * g.f * x / F;
            };
            a[i] = std::clamp(golden_section_min(fn, lo[i], 1.0, 1e-10), lo[i], 1.0);
        }
        return a;
    };
    auto band_of = [&](const std::vector<double>& a) {
        double s = fixed_band;
        for (std::size_t i = 0; i < D; ++i) s += band_demand(view.linked[i], a[i], T);
        return s;
    };

    std::vector<CandidateSolution> candidates;
    auto push_candidate = [&](const std::vector<double>& a) {
        CandidateSolution c;
        c.alpha = a;
        c.band = band_of(a);
        double weighted = 0.0;
        for (std::size_t i = 0; i < D; ++i) weighted += a[i] * view.linked[i].f;
        for (const auto& g : view.local_only) weighted += (g.C / T) * g.f;
        c.cost = omega * c.band + (1.0 - omega) * (F > 0.0 ? weighted / F : 0.0);
        if (c.band <= 1.0 + 1e-12) candidates.push_back(std::move(c));
    };

    // all processors fully on: the least bandwidth-hungry point, feasible by the gate above
    push_candidate(std::vector<double>(D, 1.0));

    const auto unpriced = alphas_for(0.0);
    if (band_of(unpriced) <= 1.0) {
        push_candidate(unpriced);
    } else {
        // price the band budget until it is respected
        double lam_hi = 1.0;
        bool bracketed = false;
        for (int k = 0; k < 120; ++k) {
            if (band_of(alphas_for(lam_hi)) <= 1.0) {
                bracketed = true;
                break;
            }
            lam_hi *= 4.0;
        }
        if (bracketed) {
            double lam_lo = 0.0;
            for (int k = 0; k < 200 && (lam_hi - lam_lo) > 1e-14 * std::max(1.0, lam_hi); ++k) {
                const double mid = 0.5 * (lam_lo + lam_hi);
                if (band_of(alphas_for(mid)) <= 1.0)
                    lam_hi = mid;
                else
                    lam_lo = mid;
            }
            push_candidate(alphas_for(lam_hi));
        }
    }

    const auto best = std::min_element(candidates.begin(), candidates.end(),
                                       [](const auto& a, const auto& b) { return a.cost < b.cost; });
    if (best == candidates.end()) return infeasible;
    return assemble(problem, view, best->alpha);
}

AllocationResult grid_search_reference(const ActiveProblem& problem, int grid_steps,
                                       int refine_rounds) {
    if (grid_steps < 3) throw std::invalid_argument("grid_search_reference: need at least 3 steps");
    AllocationResult infeasible;
    infeasible.feasible = false;
    infeasible.cost = kInf;
    if (!feasibility(problem)) return infeasible;

    const auto view = split_problem(problem);
    const double T = problem.T;
    const double omega = problem.omega;
    const double F = problem.total_f;

    double fixed_band = 0.0;
    for (const auto& g : view.pass_through)
        for (double c : g.link_times) fixed_band += c / T;
    double fixed_compute = 0.0;
    for (const auto& g : view.local_only) fixed_compute += (g.C / T) * g.f;

    const std::size_t D = view.linked.size();
    std::vector<double> lo(D), hi(D, 1.0);
    for (std::size_t i = 0; i < D; ++i)
        lo[i] = std::min(1.0, view.linked[i].C / T + 1e-12);

    std::vector<double> best_alpha(D, 1.0);
    double best_cost = kInf;

    auto eval_point = [&](const std::vector<double>& a) {
        double band = fixed_band;
        double weighted = fixed_compute;
        for (std::size_t i = 0; i < D; ++i) {
            band += band_demand(view.linked[i], a[i], T);
            weighted += a[i] * view.linked[i].f;
        }
        if (band > 1.0 + 1e-12) return kInf;
        return omega * band + (1.0 - omega) * (F > 0.0 ? weighted / F : 0.0);
    };

    if (D == 0) {
        auto r = assemble(problem, view, {});
        if (r.beta_sum() > 1.0 + 1e-12) return infeasible;
        return r;
    }

    std::vector<double> w_lo = lo, w_hi = hi;
    for (int round = 0; round <= refine_rounds; ++round) {
        std::vector<int> idx(D, 0);
        std::vector<double> point(D);
        std::vector<int> best_idx(D, -1);
        bool carry = false;
        while (!carry) {
            for (std::size_t i = 0; i < D; ++i) {
                point[i] = (grid_steps == 1)
                               ? w_hi[i]
                               : w_lo[i] + (w_hi[i] - w_lo[i]) * idx[i] / (grid_steps - 1);
            }
            const double c = eval_point(point);
            if (c < best_cost) {
                best_cost = c;
                best_alpha = point;
                best_idx = idx;
            }
            carry = true;
            for (std::size_t i = 0; i < D && carry; ++i) {
                if (++idx[i] < grid_steps)
                    carry = false;
                else
                    idx[i] = 0;
            }
        }
        // re-grid around the incumbent; re-center without shrinking when it sits
        // on the window edge
        bool at_edge = false;
        for (std::size_t i = 0; i < D; ++i)
            if (best_idx[i] <= 0 || best_idx[i] >= grid_steps - 1) at_edge = true;
        double max_width = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double cell = (w_hi[i] - w_lo[i]) / (grid_steps - 1);
            const double half = at_edge ? (w_hi[i] - w_lo[i]) / 2.0 : 3.0 * cell;
            w_lo[i] = std::max(lo[i], best_alpha[i] - half);
            w_hi[i] = std::min(1.0, best_alpha[i] + half);
            if (w_hi[i] <= w_lo[i]) w_hi[i] = std::min(1.0, w_lo[i] + 1e-15);
            max_width = std::max(max_width, w_hi[i] - w_lo[i]);
        }
        if (max_width < 1e-13) break;
    }

    if (!std::isfinite(best_cost)) return infeasible;
    return assemble(problem, view, best_alpha);
}

}  // namespace coopsense::resalloc
