#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coopsense/accuracy.hpp"
#include "coopsense/quality.hpp"
#include "coopsense/scene.hpp"

namespace coopsense::netmodel {

/// Radio, compute and task parameters. Defaults model a 20 MHz band shared by
/// the platoon, 10 GHz CAV processors and a 200 GHz edge server.
struct SystemParams {
    double B = 2e7;          ///< Hz, shared bandwidth
    double sigma2 = 1e-13;   ///< W, noise power
    double P = 1.0;          ///< W, transmit power per CAV
    double gamma = 3.4;      ///< path-loss exponent
    double h2 = 1.0;         ///< fading gain |h|^2
    double f_cav = 1e10;     ///< Hz, CAV processor
    double f_rsu = 2e11;     ///< Hz, edge server processor
    double phi = 192.0;      ///< bits per point
    double epsilon = 30000;  ///< cycles per point
    double omega = 0.5;      ///< cost weight: bandwidth vs compute
    double T = 0.02;         ///< s, per-frame deadline
    double A = 0.9;          ///< required classification accuracy

    /// Processor speed of node n out of N CAVs; node N is the edge server.
    double f(int node, int num_cavs) const;
    /// Sum of all N+1 processor speeds.
    double total_f(int num_cavs) const;
};

std::string params_to_json(const SystemParams& p);
SystemParams params_from_json(const std::string& text);

/// Data selection and subtask placement. selection[n][m] says CAV n's sensing
/// data of object m is used; placement[n'][m] says subtask m runs on node n'
/// (one node per subtask, node N being the edge server).
struct Assignment {
    std::vector<std::vector<std::uint8_t>> selection;  // N x M
    std::vector<std::vector<std::uint8_t>> placement;  // (N+1) x M

    static Assignment empty(int num_cavs, int num_objects);
    int num_cavs() const { return static_cast<int>(selection.size()); }
    int num_objects() const;
    int placed_node(int m) const;  ///< -1 if no node selected
};

/// Link activation matrix: chi[n][n'] = 1 iff some subtask placed on n' uses
/// data selected at CAV n, with n != n'.
std::vector<std::vector<std::uint8_t>> link_activation(const Assignment& a);

enum class ViolationKind {
    placement_count,   ///< subtask not placed on exactly one node
    half_duplex,       ///< a CAV both/multiply sends or receives
    empty_selection,   ///< selected data set is empty
};

struct TopologyViolation {
    ViolationKind kind;
    int index;          ///< subtask or CAV index, depending on kind
    std::string detail;
};

/// Structural checks on an assignment: each subtask on exactly one node, no CAV
/// taking part in more than one active link (the edge server is exempt), no
/// empty sensing data selected. point_counts is N x M.
std::vector<TopologyViolation> validate_topology(
    const Assignment& a, const std::vector<std::vector<std::int64_t>>& point_counts);

/// Cycles demanded by each subtask and aggregated per node. Returns {per
/// subtask (M), per node (N+1)}.
struct ComputeDemand {
    std::vector<double> per_subtask;
    std::vector<double> per_node;
};
ComputeDemand computing_demands(const Assignment& a,
                                const std::vector<std::vector<std::int64_t>>& point_counts,
                                const SystemParams& p);

/// mu / (alpha * f); 0 when nothing to compute, +inf when mu > 0 but alpha = 0.
double computing_time(double mu, double alpha, double f);

/// Bits CAV n must push to node n' under the assignment.
double link_load(const Assignment& a,
                 const std::vector<std::vector<std::int64_t>>& point_counts,
                 const SystemParams& p, int n, int n_prime);

double snr(const SystemParams& p, double dist);

/// Achievable rate for bandwidth share beta over a link of length dist.
/// Requires dist > 0; throws std::invalid_argument otherwise.
double transmission_rate(double beta, const SystemParams& p, double dist);

/// rho / rate; 0 when nothing to send, +inf when rho > 0 but rate = 0.
double transmission_time(double rho, double rate);

/// omega * sum(beta) + (1-omega) * sum(alpha_n f_n) / sum(f_n).
double total_cost(const std::vector<double>& alpha, double beta_sum,
                  const SystemParams& p);

/// Everything the optimizers need about one scene: per-CAV per-object point
/// sets, their indicators at the working resolution, pairwise node distances
/// and the trained estimator.
struct TaskContext {
    int num_cavs = 0;
    std::vector<scene::ObjectSpec> objects;
    std::vector<scene::Point3> sensor_origins;
    std::vector<std::vector<scene::PointCloud>> object_points;        // [n][m]
    std::vector<std::vector<quality::QualityIndicator>> indicators;   // [n][m]
    std::vector<std::vector<std::int64_t>> point_counts;              // [n][m]
    std::vector<std::vector<double>> dist;                            // [n][n'], n' in 0..N
    SystemParams params;
    quality::PartitionResolution resolution;
    const accuracy::MlpModel* model = nullptr;
    accuracy::OracleParams oracle;

    int rsu_node() const { return num_cavs; }
    int num_objects() const { return static_cast<int>(objects.size()); }
    bool available(int n, int m) const { return point_counts[n][m] > 0; }
};

/// Simulates every CAV's lidar in the scenario and assembles the context.
TaskContext build_context(const scene::Scenario& scenario, const SystemParams& params,
                          quality::PartitionResolution resolution,
                          const accuracy::MlpModel* model,
                          const accuracy::OracleParams& oracle = {});

/// Estimator accuracy of object m under a selection bitmask over CAVs.
double predicted_accuracy(const TaskContext& ctx, int m, std::uint32_t selection_mask);
/// Oracle accuracy of the fused point set for the same selection.
double measured_accuracy(const TaskContext& ctx, int m, std::uint32_t selection_mask);

struct AccuracyCheck {
    double estimate = 0.0;
    bool pass = false;
};

/// Estimator accuracy of every subtask under the assignment, tested against
/// the requirement.
std::vector<AccuracyCheck> check_accuracy(const TaskContext& ctx, const Assignment& a,
                                          double requirement);

/// Re-derives every constraint of the joint problem from scratch for a solved
/// allocation and returns human-readable violations (empty when clean).
/// check_accuracy_requirement=false skips the accuracy clause, for schemes that
/// only report accuracy instead of enforcing it.
std::vector<std::string> verify_solution(const TaskContext& ctx, const Assignment& a,
                                         const std::vector<double>& alpha,
                                         const std::vector<std::vector<double>>& beta,
                                         double requirement, double tol = 1e-8,
                                         bool check_accuracy_requirement = true);

}  // namespace coopsense::netmodel
