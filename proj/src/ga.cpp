#include "coopsense/ga.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace coopsense::ga {

namespace {

inline double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

std::string genome_key(const Genome& genes) {
    std::string key;
    key.reserve(genes.size() * 5);
    for (const auto& g : genes) {
        for (int b = 0; b < 4; ++b) key.push_back(static_cast<char>((g.selection >> (8 * b)) & 0xff));
        key.push_back(static_cast<char>(g.placement));
    }
    return key;
}

std::uint32_t availability_mask(const netmodel::TaskContext& ctx, int m) {
    std::uint32_t mask = 0;
    for (int n = 0; n < ctx.num_cavs; ++n)
        if (ctx.available(n, m)) mask |= 1u << n;
    return mask;
}

/// Spreads the (1-based) subset rank onto the set bits of the availability mask.
std::uint32_t nth_submask(std::uint32_t avail, std::uint64_t rank) {
    std::uint32_t out = 0;
    for (int n = 0; n < 32 && rank; ++n) {
        if (!(avail & (1u << n))) continue;
        if (rank & 1ULL) out |= 1u << n;
        rank >>= 1;
    }
    return out;
}

struct LinkSet {
    std::vector<std::pair<int, int>> links;

    bool has(int src, int dst) const {
        return std::find(links.begin(), links.end(), std::make_pair(src, dst)) != links.end();
    }
    void add(int src, int dst) {
        if (!has(src, dst)) links.emplace_back(src, dst);
    }
    /// Every CAV may take part in at most one active link; the edge server
    /// (node id num_cavs) is exempt.
    bool half_duplex_ok(int num_cavs) const {
        std::vector<int> busy(num_cavs, 0);
        for (const auto& [src, dst] : links) {
            if (src < num_cavs) busy[src] += 1;
            if (dst < num_cavs) busy[dst] += 1;
        }
        return std::all_of(busy.begin(), busy.end(), [](int b) { return b <= 1; });
    }
};

LinkSet links_of(const Genome& genes, int num_cavs) {
    LinkSet ls;
    for (const auto& g : genes)
        for (int n = 0; n < num_cavs; ++n)
            if ((g.selection & (1u << n)) && n != g.placement) ls.add(n, g.placement);
    return ls;
}

}  // namespace

std::vector<int> SearchSpace::nodes() const {
    if (!allowed_nodes.empty()) return allowed_nodes;
    std::vector<int> all(ctx->num_cavs + 1);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

netmodel::Assignment to_assignment(const Genome& genes, const netmodel::TaskContext& ctx) {
    auto a = netmodel::Assignment::empty(ctx.num_cavs, static_cast<int>(genes.size()));
    for (std::size_t m = 0; m < genes.size(); ++m) {
        for (int n = 0; n < ctx.num_cavs; ++n)
            if (genes[m].selection & (1u << n)) a.selection[n][m] = 1;
        a.placement[genes[m].placement][m] = 1;
    }
    return a;
}

double Evaluator::subtask_accuracy(int m, std::uint32_t mask) {
    const std::uint64_t key = (static_cast<std::uint64_t>(m) << 32) | mask;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = accuracy_cache_.find(key);
        if (it != accuracy_cache_.end()) return it->second;
    }
    const double value = netmodel::predicted_accuracy(*space_->ctx, m, mask);
    std::lock_guard<std::mutex> lock(mutex_);
    accuracy_cache_.emplace(key, value);
    return value;
}

EvalOutcome Evaluator::evaluate(const Genome& genes) {
    const std::string key = genome_key(genes);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }

    const auto& ctx = *space_->ctx;
    EvalOutcome out;
    for (std::size_t m = 0; m < genes.size(); ++m) {
        if (subtask_accuracy(static_cast<int>(m), genes[m].selection) < space_->requirement) {
            out.status = EvalStatus::accuracy_fail;
            break;
        }
    }
    if (out.status == EvalStatus::ok) {
        const auto a = to_assignment(genes, ctx);
        if (!netmodel::validate_topology(a, ctx.point_counts).empty()) {
            out.status = EvalStatus::topology_fail;
        } else {
            out.alloc = resalloc::solve_allocation(resalloc::build_problem(ctx, a));
            if (!out.alloc.feasible) out.status = EvalStatus::delay_fail;
        }
    }
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key, out);
    return out;
}

InitError::InitError(const std::string& msg, int acc, int topo, int delay)
    : std::runtime_error(msg), accuracy_fails(acc), topology_fails(topo), delay_fails(delay) {}

namespace {

enum class SampleFail { none, accuracy, topology };

/// Draws one genome: random non-empty selections repaired toward the accuracy
/// requirement, placements drawn among half-duplex-safe nodes.
SampleFail sample_genome(const SearchSpace& space, std::mt19937_64& rng, Evaluator& eval,
                         Genome& out) {
    const auto& ctx = *space.ctx;
    const int M = ctx.num_objects();
    const auto nodes = space.nodes();
    out.clear();
    out.reserve(M);
    LinkSet links;
    for (int m = 0; m < M; ++m) {
        const std::uint32_t avail = availability_mask(ctx, m);
        const int observers = std::popcount(avail);
        if (observers == 0) return SampleFail::accuracy;
        std::uint32_t mask =
            nth_submask(avail, 1 + rng() % ((1ULL << observers) - 1));
        // greedy repair: add the observer with the best marginal estimate
        while (eval.subtask_accuracy(m, mask) < space.requirement && mask != avail) {
            std::uint32_t best_bit = 0;
            double best_acc = -1.0;
            for (int n = 0; n < ctx.num_cavs; ++n) {
                const std::uint32_t bit = 1u << n;
                if (!(avail & bit) || (mask & bit)) continue;
                const double acc = eval.subtask_accuracy(m, mask | bit);
                if (acc > best_acc) {
                    best_acc = acc;
                    best_bit = bit;
                }
            }
            mask |= best_bit;
        }
        if (eval.subtask_accuracy(m, mask) < space.requirement) return SampleFail::accuracy;

        std::vector<int> safe;
        for (int node : nodes) {
            LinkSet tentative = links;
            for (int n = 0; n < ctx.num_cavs; ++n)
                if ((mask & (1u << n)) && n != node) tentative.add(n, node);
            if (tentative.half_duplex_ok(ctx.num_cavs)) safe.push_back(node);
        }
        if (safe.empty()) return SampleFail::topology;
        const int node = safe[rng() % safe.size()];
        for (int n = 0; n < ctx.num_cavs; ++n)
            if ((mask & (1u << n)) && n != node) links.add(n, node);
        out.push_back({mask, node});
    }
    return SampleFail::none;
}

}  // namespace

std::vector<Individual> init_population(const SearchSpace& space, const GaConfig& cfg,
                                        std::mt19937_64& rng, Evaluator& eval,
                                        const std::vector<Genome>& warm_starts) {
    if (cfg.population < 2) throw std::invalid_argument("init_population: population must be >= 2");
    std::vector<Individual> pop;
    for (const auto& genes : warm_starts) {
        if (static_cast<int>(pop.size()) >= cfg.population) break;
        const auto outcome = eval.evaluate(genes);
        if (outcome.status == EvalStatus::ok) pop.push_back({genes, outcome.alloc.cost});
    }

    int acc_fails = 0, topo_fails = 0, delay_fails = 0;
    int attempts = 0;
    Genome genes;
    while (static_cast<int>(pop.size()) < cfg.population && attempts < cfg.max_init_attempts) {
        ++attempts;
        switch (sample_genome(space, rng, eval, genes)) {
            case SampleFail::accuracy:
                ++acc_fails;
                continue;
            case SampleFail::topology:
                ++topo_fails;
                continue;
            case SampleFail::none:
                break;
        }
        const auto outcome = eval.evaluate(genes);
        if (outcome.status != EvalStatus::ok) {
            ++delay_fails;  // accuracy/topology hold by construction
            continue;
        }
        pop.push_back({genes, outcome.alloc.cost});
    }

    if (static_cast<int>(pop.size()) < cfg.population) {
        const char* tightest = "deadline";
        int worst = delay_fails;
        if (topo_fails > worst) {
            tightest = "half-duplex topology";
            worst = topo_fails;
        }
        if (acc_fails > worst) {
            tightest = "accuracy requirement";
            worst = acc_fails;
        }
        std::ostringstream msg;
        msg << "could not assemble a feasible population after " << attempts
            << " attempts; tightest constraint class: " << tightest << " (accuracy " << acc_fails
            << ", topology " << topo_fails << ", deadline " << delay_fails << ")";
        throw InitError(msg.str(), acc_fails, topo_fails, delay_fails);
    }
    return pop;
}

std::pair<int, int> select_parents(const std::vector<Individual>& population,
                                   std::mt19937_64& rng) {
    const std::size_t J = population.size();
    if (J < 2) throw std::invalid_argument("select_parents: need at least two individuals");
    double sum = 0.0;
    for (const auto& ind : population) sum += ind.cost;

    std::vector<double> cumulative(J);
    double acc = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double w = sum > 0.0 ? 1.0 - population[j].cost / sum : 1.0;
        acc += w;
        cumulative[j] = acc;
    }
    auto draw = [&]() {
        const double u = u01(rng) * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return static_cast<int>(std::min<std::size_t>(it - cumulative.begin(), J - 1));
    };
    const int first = draw();
    const int second = draw();
    return {first, second};
}

Genome crossover(const Genome& a, const Genome& b, int cut) {
    if (a.size() != b.size()) throw std::invalid_argument("crossover: genome size mismatch");
    if (cut < 0 || cut > static_cast<int>(a.size()))
        throw std::invalid_argument("crossover: cut out of range");
    Genome out(a.begin(), a.begin() + cut);
    out.insert(out.end(), b.begin() + cut, b.end());
    return out;
}

Genome mutate(const Genome& genes, int position, const Gene& replacement) {
    if (position < 0 || position >= static_cast<int>(genes.size()))
        throw std::invalid_argument("mutate: position out of range");
    Genome out = genes;
    out[position] = replacement;
    return out;
}

std::vector<Individual> evolve_generation(const std::vector<Individual>& population,
                                          const SearchSpace& space, const GaConfig& cfg,
                                          std::mt19937_64& rng, Evaluator& eval) {
    const std::size_t J = population.size();
    if (J < 2) throw std::invalid_argument("evolve_generation: need at least two individuals");
    const auto& ctx = *space.ctx;
    const int M = ctx.num_objects();
    const auto nodes = space.nodes();

    std::size_t elite = 0;
    for (std::size_t j = 1; j < J; ++j)
        if (population[j].cost < population[elite].cost) elite = j;

    // all randomness is drawn here, in a fixed order, so evaluation may run in
    // parallel without disturbing the stream
    struct Offspring {
        int parent1 = 0;
        Genome candidate;
    };
    std::vector<Offspring> slots;
    slots.reserve(J - 1);
    for (std::size_t j = 1; j < J; ++j) {
        Offspring o;
        const auto [p1, p2] = select_parents(population, rng);
        o.parent1 = p1;
        const double xi = u01(rng);
        const double xi_mut = cfg.two_draw ? u01(rng) : xi;
        o.candidate = population[p1].genes;
        if (xi <= cfg.p_crossover) {
            const int cut = static_cast<int>(rng() % M);
            o.candidate = crossover(population[p1].genes, population[p2].genes, cut);
        }
        if (xi_mut <= cfg.p_mutation) {
            const int pos = static_cast<int>(rng() % M);
            const std::uint32_t avail = availability_mask(ctx, pos);
            const int observers = std::popcount(avail);
            Gene g;
            g.selection = observers > 0 ? nth_submask(avail, 1 + rng() % ((1ULL << observers) - 1))
                                        : 0;
            g.placement = nodes[rng() % nodes.size()];
            o.candidate = mutate(o.candidate, pos, g);
        }
        slots.push_back(std::move(o));
    }

    std::vector<EvalOutcome> outcomes(slots.size());
    if (cfg.parallel) {
        std::vector<std::future<EvalOutcome>> futures;
        futures.reserve(slots.size());
        for (const auto& slot : slots)
            futures.push_back(std::async(std::launch::async,
                                         [&eval, &slot] { return eval.evaluate(slot.candidate); }));
        for (std::size_t k = 0; k < futures.size(); ++k) outcomes[k] = futures[k].get();
    } else {
        for (std::size_t k = 0; k < slots.size(); ++k) outcomes[k] = eval.evaluate(slots[k].candidate);
    }

    std::vector<Individual> next;
    next.reserve(J);
    next.push_back(population[elite]);
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (outcomes[k].status == EvalStatus::ok)
            next.push_back({slots[k].candidate, outcomes[k].alloc.cost});
        else
            next.push_back(population[slots[k].parent1]);
    }
    return next;
}

GaResult run(const SearchSpace& space, const GaConfig& cfg, const std::vector<Genome>& warm_starts) {
    if (!space.ctx) throw std::invalid_argument("ga::run: missing task context");
    if (cfg.generations < 1) throw std::invalid_argument("ga::run: generations must be >= 1");
    if (cfg.p_crossover < 0.0 || cfg.p_crossover > 1.0 || cfg.p_mutation < 0.0 ||
        cfg.p_mutation > 1.0)
        throw std::invalid_argument("ga::run: probabilities must lie in [0,1]");

    std::mt19937_64 rng(cfg.seed);
    Evaluator eval(space);
    auto population = init_population(space, cfg, rng, eval, warm_starts);

    GaResult result;
    for (int k = 0; k < cfg.generations; ++k) {
        population = evolve_generation(population, space, cfg, rng, eval);
        std::size_t best = 0;
        for (std::size_t j = 1; j < population.size(); ++j)
            if (population[j].cost < population[best].cost) best = j;
        result.elite_history.push_back(population[best].cost);
    }

    std::size_t best = 0;
    for (std::size_t j = 1; j < population.size(); ++j)
        if (population[j].cost < population[best].cost) best = j;
    result.best = population[best];
    result.alloc = eval.evaluate(result.best.genes).alloc;
    return result;
}

ExhaustiveResult exhaustive_search(const SearchSpace& space, std::uint64_t max_combinations) {
    if (!space.ctx) throw std::invalid_argument("exhaustive_search: missing task context");
    const auto& ctx = *space.ctx;
    const int M = ctx.num_objects();
    const auto nodes = space.nodes();
    Evaluator eval(space);

    ExhaustiveResult result;
    std::vector<std::vector<Gene>> options(M);
    for (int m = 0; m < M; ++m) {
        const std::uint32_t avail = availability_mask(ctx, m);
        for (std::uint32_t mask = avail; mask != 0; mask = (mask - 1) & avail) {
            if (eval.subtask_accuracy(m, mask) < space.requirement) continue;
            for (int node : nodes) options[m].push_back({mask, node});
        }
        if (options[m].empty()) return result;  // some subtask cannot meet the requirement
    }

    std::uint64_t total = 1;
    for (const auto& opts : options) {
        total *= opts.size();
        if (total > max_combinations)
            throw std::invalid_argument("exhaustive_search: search space too large");
    }
    result.combinations = total;

    std::vector<std::size_t> idx(M, 0);
    Genome genes(M);
    bool done = false;
    while (!done) {
        for (int m = 0; m < M; ++m) genes[m] = options[m][idx[m]];
        const auto links = links_of(genes, ctx.num_cavs);
        if (links.half_duplex_ok(ctx.num_cavs)) {
            const auto a = to_assignment(genes, ctx);
            const auto alloc = resalloc::solve_allocation(resalloc::build_problem(ctx, a));
            if (alloc.feasible && (!result.feasible || alloc.cost < result.best.cost)) {
                result.feasible = true;
                result.best = {genes, alloc.cost};
                result.alloc = alloc;
            }
        }
        done = true;
        for (int m = 0; m < M && done; ++m) {
            if (++idx[m] < options[m].size())
                done = false;
            else
                idx[m] = 0;
        }
    }
    return result;
}

}  // namespace coopsense::ga
