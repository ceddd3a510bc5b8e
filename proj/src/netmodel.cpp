#include "coopsense/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "coopsense/resalloc.hpp"

namespace coopsense::netmodel {

using nlohmann::json;

double SystemParams::f(int node, int num_cavs) const {
    if (node < 0 || node > num_cavs) throw std::invalid_argument("SystemParams::f: node out of range");
    return node == num_cavs ? f_rsu : f_cav;
}

double SystemParams::total_f(int num_cavs) const { return num_cavs * f_cav + f_rsu; }

std::string params_to_json(const SystemParams& p) {
    json j{{"B", p.B},         {"sigma2", p.sigma2}, {"P_n", p.P},     {"gamma", p.gamma},
           {"h2", p.h2},       {"f_cav", p.f_cav},   {"f_rsu", p.f_rsu}, {"phi", p.phi},
           {"epsilon", p.epsilon}, {"omega", p.omega}, {"T", p.T},     {"A", p.A}};
    return j.dump(2);
}

SystemParams params_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("params: invalid JSON: ") + e.what());
    }
    SystemParams p;
    const char* known[] = {"B",     "sigma2", "P_n",   "gamma", "h2", "f_cav",
                           "f_rsu", "phi",    "epsilon", "omega", "T",  "A"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return it.key() == k; }) == std::end(known))
            throw std::runtime_error("params: unknown field '" + it.key() + "'");
        if (!it.value().is_number())
            throw std::runtime_error("params: field '" + it.key() + "' must be a number");
    }
    p.B = j.value("B", p.B);
    p.sigma2 = j.value("sigma2", p.sigma2);
    p.P = j.value("P_n", p.P);
    p.gamma = j.value("gamma", p.gamma);
    p.h2 = j.value("h2", p.h2);
    p.f_cav = j.value("f_cav", p.f_cav);
    p.f_rsu = j.value("f_rsu", p.f_rsu);
    p.phi = j.value("phi", p.phi);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.omega = j.value("omega", p.omega);
    p.T = j.value("T", p.T);
    p.A = j.value("A", p.A);
    return p;
}

Assignment Assignment::empty(int num_cavs, int num_objects) {
    Assignment a;
    a.selection.assign(num_cavs, std::vector<std::uint8_t>(num_objects, 0));
    a.placement.assign(num_cavs + 1, std::vector<std::uint8_t>(num_objects, 0));
    return a;
}

int Assignment::num_objects() const {
    return selection.empty() ? 0 : static_cast<int>(selection.front().size());
}

int Assignment::placed_node(int m) const {
    for (std::size_t n = 0; n < placement.size(); ++n)
        if (placement[n][m]) return static_cast<int>(n);
    return -1;
}

std::vector<std::vector<std::uint8_t>> link_activation(const Assignment& a) {
    const int N = a.num_cavs();
    const int M = a.num_objects();
    std::vector<std::vector<std::uint8_t>> chi(N, std::vector<std::uint8_t>(N + 1, 0));
    for (int m = 0; m < M; ++m) {
        const int dst = a.placed_node(m);
        if (dst < 0) continue;
        for (int n = 0; n < N; ++n)
            if (a.selection[n][m] && n != dst) chi[n][dst] = 1;
    }
    return chi;
}

std::vector<TopologyViolation> validate_topology(
    const Assignment& a, const std::vector<std::vector<std::int64_t>>& point_counts) {
    std::vector<TopologyViolation> out;
    const int N = a.num_cavs();
    const int M = a.num_objects();

    for (int m = 0; m < M; ++m) {
        int placed = 0;
        for (int n = 0; n <= N; ++n) placed += a.placement[n][m] ? 1 : 0;
        if (placed != 1) {
            std::ostringstream msg;
            msg << "subtask " << m << " placed on " << placed << " nodes";
            out.push_back({ViolationKind::placement_count, m, msg.str()});
        }
    }

    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m)
            if (a.selection[n][m] && point_counts[n][m] == 0) {
                std::ostringstream msg;
                msg << "CAV " << n << " selected for subtask " << m << " without data";
                out.push_back({ViolationKind::empty_selection, m, msg.str()});
            }

    const auto chi = link_activation(a);
    for (int n = 0; n < N; ++n) {
        int busy = 0;
        for (int dst = 0; dst <= N; ++dst) busy += chi[n][dst];
        for (int src = 0; src < N; ++src) busy += chi[src][n];
        if (busy > 1) {
            std::ostringstream msg;
            msg << "CAV " << n << " takes part in " << busy << " active links";
            out.push_back({ViolationKind::half_duplex, n, msg.str()});
        }
    }
    return out;
}

ComputeDemand computing_demands(const Assignment& a,
                                const std::vector<std::vector<std::int64_t>>& point_counts,
                                const SystemParams& p) {
    const int N = a.num_cavs();
    const int M = a.num_objects();
    ComputeDemand d;
    d.per_subtask.assign(M, 0.0);
    d.per_node.assign(N + 1, 0.0);
    for (int m = 0; m < M; ++m) {
        double points = 0.0;
        for (int n = 0; n < N; ++n)
            if (a.selection[n][m]) points += static_cast<double>(point_counts[n][m]);
        d.per_subtask[m] = p.epsilon * points;
        const int node = a.placed_node(m);
        if (node >= 0) d.per_node[node] += d.per_subtask[m];
    }
    return d;
}

double computing_time(double mu, double alpha, double f) {
    if (mu <= 0.0) return 0.0;
    if (alpha <= 0.0) return std::numeric_limits<double>::infinity();
    return mu / (alpha * f);
}

double link_load(const Assignment& a,
                 const std::vector<std::vector<std::int64_t>>& point_counts,
                 const SystemParams& p, int n, int n_prime) {
    const int M = a.num_objects();
    double bits = 0.0;
    for (int m = 0; m < M; ++m)
        if (a.selection[n][m] && a.placement[n_prime][m])
            bits += p.phi * static_cast<double>(point_counts[n][m]);
    return bits;
}

double snr(const SystemParams& p, double dist) {
    if (dist <= 0.0) throw std::invalid_argument("snr: distance must be positive");
    return p.P * p.h2 * std::pow(dist, -p.gamma) / p.sigma2;
}

double transmission_rate(double beta, const SystemParams& p, double dist) {
    return beta * p.B * std::log2(1.0 + snr(p, dist));
}

double transmission_time(double rho, double rate) {
    if (rho <= 0.0) return 0.0;
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return rho / rate;
}

double total_cost(const std::vector<double>& alpha, double beta_sum, const SystemParams& p) {
    const int num_cavs = static_cast<int>(alpha.size()) - 1;
    if (num_cavs < 0) throw std::invalid_argument("total_cost: alpha must cover every node");
    double weighted = 0.0;
    for (int n = 0; n <= num_cavs; ++n) weighted += alpha[n] * p.f(n, num_cavs);
    return p.omega * beta_sum + (1.0 - p.omega) * weighted / p.total_f(num_cavs);
}

TaskContext build_context(const scene::Scenario& scenario, const SystemParams& params,
                          quality::PartitionResolution resolution,
                          const accuracy::MlpModel* model, const accuracy::OracleParams& oracle) {
    TaskContext ctx;
    ctx.num_cavs = static_cast<int>(scenario.cavs.size());
    ctx.objects = scenario.objects;
    ctx.params = params;
    ctx.resolution = resolution;
    ctx.model = model;
    ctx.oracle = oracle;

    const int N = ctx.num_cavs;
    const int M = ctx.num_objects();
    ctx.object_points.resize(N);
    ctx.indicators.resize(N);
    ctx.point_counts.assign(N, std::vector<std::int64_t>(M, 0));
    for (int n = 0; n < N; ++n) {
        ctx.sensor_origins.push_back(scenario.cavs[n].sensor_origin);
        const auto cloud = scene::simulate_lidar(scenario, scenario.cavs[n], scenario.lidar);
        ctx.object_points[n] = scene::partition_object_points(cloud, scenario.objects);
        for (int m = 0; m < M; ++m) {
            ctx.indicators[n].push_back(quality::compute_indicator(
                ctx.object_points[n][m], scenario.objects[m].box, resolution));
            ctx.point_counts[n][m] = static_cast<std::int64_t>(ctx.object_points[n][m].size());
        }
    }

    ctx.dist.assign(N, std::vector<double>(N + 1, 0.0));
    for (int n = 0; n < N; ++n) {
        for (int n2 = 0; n2 < N; ++n2)
            if (n != n2)
                ctx.dist[n][n2] =
                    scene::distance(scenario.cavs[n].body.center, scenario.cavs[n2].body.center);
        ctx.dist[n][N] = scene::distance(scenario.cavs[n].body.center, scenario.rsu_position);
    }
    return ctx;
}

double predicted_accuracy(const TaskContext& ctx, int m, std::uint32_t selection_mask) {
    if (!ctx.model) throw std::invalid_argument("predicted_accuracy: context has no model");
    std::vector<std::uint8_t> sel(ctx.num_cavs, 0);
    for (int n = 0; n < ctx.num_cavs; ++n) sel[n] = (selection_mask >> n) & 1u;
    std::vector<quality::QualityIndicator> inds;
    inds.reserve(ctx.num_cavs);
    for (int n = 0; n < ctx.num_cavs; ++n) inds.push_back(ctx.indicators[n][m]);
    const auto fused = quality::fuse_indicators(sel, inds);
    return accuracy::predict_accuracy(*ctx.model, fused, ctx.objects[m].box);
}

double measured_accuracy(const TaskContext& ctx, int m, std::uint32_t selection_mask) {
    scene::PointCloud fused;
    for (int n = 0; n < ctx.num_cavs; ++n)
        if (selection_mask & (1u << n))
            fused.insert(fused.end(), ctx.object_points[n][m].begin(),
                         ctx.object_points[n][m].end());
    return accuracy::oracle_accuracy(fused, ctx.objects[m].box, ctx.oracle);
}

std::vector<AccuracyCheck> check_accuracy(const TaskContext& ctx, const Assignment& a,
                                          double requirement) {
    std::vector<AccuracyCheck> out;
    for (int m = 0; m < ctx.num_objects(); ++m) {
        std::uint32_t mask = 0;
        for (int n = 0; n < ctx.num_cavs; ++n)
            if (a.selection[n][m]) mask |= 1u << n;
        AccuracyCheck c;
        c.estimate = predicted_accuracy(ctx, m, mask);
        c.pass = c.estimate >= requirement;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> verify_solution(const TaskContext& ctx, const Assignment& a,
                                         const std::vector<double>& alpha,
                                         const std::vector<std::vector<double>>& beta,
                                         double requirement, double tol,
                                         bool check_accuracy_requirement) {
    std::vector<std::string> problems;
    const int N = ctx.num_cavs;
    const int M = ctx.num_objects();
    auto complain = [&](const std::string& s) { problems.push_back(s); };

    for (const auto& v : validate_topology(a, ctx.point_counts)) complain(v.detail);

    if (static_cast<int>(alpha.size()) != N + 1) {
        complain("alpha vector does not cover every node");
        return problems;
    }
    if (static_cast<int>(beta.size()) != N) {
        complain("beta matrix does not cover every CAV");
        return problems;
    }

    double beta_sum = 0.0;
    for (int n = 0; n < N; ++n) {
        if (static_cast<int>(beta[n].size()) != N + 1) {
            complain("beta matrix row has wrong width");
            return problems;
        }
        for (int d = 0; d <= N; ++d) {
            if (beta[n][d] < -tol) complain("negative bandwidth share");
            beta_sum += beta[n][d];
        }
    }
    if (beta_sum > 1.0 + tol) {
        std::ostringstream msg;
        msg << "bandwidth budget exceeded: " << beta_sum;
        complain(msg.str());
    }
    for (int n = 0; n <= N; ++n)
        if (alpha[n] < -tol || alpha[n] > 1.0 + tol) complain("compute fraction out of [0,1]");

    const auto demand = computing_demands(a, ctx.point_counts, ctx.params);
    const auto chi = link_activation(a);

    // transfer + compute deadline for every pair, plus local compute alone
    for (int dst = 0; dst <= N; ++dst) {
        const double t_comp = computing_time(demand.per_node[dst], alpha[dst],
                                             ctx.params.f(dst, N));
        if (t_comp > ctx.params.T + tol) {
            std::ostringstream msg;
            msg << "node " << dst << " compute time " << t_comp << " exceeds the deadline";
            complain(msg.str());
        }
        for (int src = 0; src < N; ++src) {
            if (src == dst) continue;
            const double rho = link_load(a, ctx.point_counts, ctx.params, src, dst);
            if (rho <= 0.0) continue;
            if (!chi[src][dst]) complain("traffic on an inactive link");
            const double rate = transmission_rate(beta[src][dst], ctx.params, ctx.dist[src][dst]);
            const double t_tx = transmission_time(rho, rate);
            if (t_tx + t_comp > ctx.params.T + tol) {
                std::ostringstream msg;
                msg << "link " << src << "->" << dst << " misses the deadline: " << t_tx + t_comp;
                complain(msg.str());
            }
        }
    }

    // no bandwidth may be spent on links that carry nothing
    for (int src = 0; src < N; ++src)
        for (int dst = 0; dst <= N; ++dst)
            if (beta[src][dst] > tol &&
                link_load(a, ctx.point_counts, ctx.params, src, dst) <= 0.0)
                complain("bandwidth assigned to an idle link");

    if (check_accuracy_requirement) {
        const auto checks = check_accuracy(ctx, a, requirement);
        for (int m = 0; m < M; ++m)
            if (checks[m].estimate < requirement - tol) {
                std::ostringstream msg;
                msg << "subtask " << m << " accuracy " << checks[m].estimate
                    << " below the requirement " << requirement;
                complain(msg.str());
            }
    }
    return problems;
}

}  // namespace coopsense::netmodel
