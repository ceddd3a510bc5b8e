#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "coopsense/netmodel.hpp"
#include "coopsense/resalloc.hpp"

namespace coopsense::ga {

/// Choice for one subtask: which CAVs contribute data (bitmask, never empty,
/// only CAVs that actually observed the object) and which node runs it.
struct Gene {
    std::uint32_t selection = 0;
    int placement = 0;

    bool operator==(const Gene&) const = default;
};

using Genome = std::vector<Gene>;

struct Individual {
    Genome genes;
    double cost = 0.0;
};

struct GaConfig {
    int population = 40;          ///< J >= 2
    int generations = 60;         ///< Gamma >= 1
    double p_crossover = 0.9;
    double p_mutation = 0.1;
    std::uint64_t seed = 1;
    int max_init_attempts = 10000;
    /// Default: one uniform draw gates both crossover and mutation. When true,
    /// mutation gets an independent draw.
    bool two_draw = false;
    bool parallel = false;        ///< evaluate candidates on a thread pool
};

/// Search space: the task context, the accuracy requirement and the nodes a
/// subtask may be placed on (all N+1 by default; restricted to the edge server
/// for the centralized baseline).
struct SearchSpace {
    const netmodel::TaskContext* ctx = nullptr;
    double requirement = 0.9;
    std::vector<int> allowed_nodes;  ///< empty = all nodes 0..N

    std::vector<int> nodes() const;
};

enum class EvalStatus { ok, accuracy_fail, topology_fail, delay_fail };

struct EvalOutcome {
    EvalStatus status = EvalStatus::ok;
    resalloc::AllocationResult alloc;
};

/// Feasibility and cost of genomes, memoized on the full gene tuple.
class Evaluator {
  public:
    explicit Evaluator(const SearchSpace& space) : space_(&space) {}

    EvalOutcome evaluate(const Genome& genes);
    /// Estimator accuracy for one subtask and selection mask, cached.
    double subtask_accuracy(int m, std::uint32_t mask);
    std::size_t cache_size() const { return cache_.size(); }

  private:
    const SearchSpace* space_;
    std::unordered_map<std::string, EvalOutcome> cache_;
    std::unordered_map<std::uint64_t, double> accuracy_cache_;
    std::mutex mutex_;
};

netmodel::Assignment to_assignment(const Genome& genes, const netmodel::TaskContext& ctx);

/// Thrown when no feasible population could be assembled; names the constraint
/// class that failed most often.
struct InitError : std::runtime_error {
    InitError(const std::string& msg, int accuracy_fails, int topology_fails, int delay_fails);
    int accuracy_fails;
    int topology_fails;
    int delay_fails;
};

/// Rejection sampling with a greedy repair: per subtask, add observing CAVs in
/// decreasing marginal estimator-accuracy order until the requirement holds,
/// then draw the placement among nodes that keep every CAV on at most one
/// active link. Warm starts are verified and used before random attempts.
std::vector<Individual> init_population(const SearchSpace& space, const GaConfig& cfg,
                                        std::mt19937_64& rng, Evaluator& eval,
                                        const std::vector<Genome>& warm_starts = {});

/// Cheaper individuals are likelier parents: p_j = (1 - cost_j / sum) / (J-1),
/// uniform when all costs are equal. Two independent draws.
std::pair<int, int> select_parents(const std::vector<Individual>& population,
                                   std::mt19937_64& rng);

/// Genes 0..cut-1 from a, the rest from b.
Genome crossover(const Genome& a, const Genome& b, int cut);

/// Replaces the gene at the position.
Genome mutate(const Genome& genes, int position, const Gene& replacement);

/// One generation: elite is carried into slot 0; every other slot breeds a
/// candidate (shared uniform draw gating crossover and mutation), which is
/// kept when feasible and otherwise falls back to its first parent. All random
/// draws happen up front in a fixed order, so candidate evaluation may run in
/// parallel without changing the outcome.
std::vector<Individual> evolve_generation(const std::vector<Individual>& population,
                                          const SearchSpace& space, const GaConfig& cfg,
                                          std::mt19937_64& rng, Evaluator& eval);

struct GaResult {
    Individual best;
    resalloc::AllocationResult alloc;
    std::vector<double> elite_history;  ///< best cost after each generation
};

GaResult run(const SearchSpace& space, const GaConfig& cfg,
             const std::vector<Genome>& warm_starts = {});

struct ExhaustiveResult {
    bool feasible = false;
    Individual best;
    resalloc::AllocationResult alloc;
    std::uint64_t combinations = 0;
};

/// Enumerates every genome (selection masks prefiltered by the accuracy
/// requirement) and returns the cheapest feasible one. Throws when the space
/// exceeds max_combinations.
ExhaustiveResult exhaustive_search(const SearchSpace& space,
                                   std::uint64_t max_combinations = 1000000);

}  // namespace coopsense::ga
