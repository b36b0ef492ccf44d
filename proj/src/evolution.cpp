#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "kitbt/gp.hpp"

namespace kitbt {

namespace {

enum stream_purpose : std::uint64_t {
    init_stream = 1,
    select_stream,
    mutate_stream,
    crossover_stream,
    survival_stream,
};

std::vector<double> fitness_of(const std::vector<individual>& pop) {
    std::vector<double> f;
    f.reserve(pop.size());
    for (const auto& ind : pop) {
        f.push_back(ind.fitness);
    }
    return f;
}

std::size_t best_index(const std::vector<individual>& pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (pop[i].fitness > pop[best].fitness) {
            best = i;
        }
    }
    return best;
}

void record_generation(evolution_state& state) {
    const individual& b = state.population[best_index(state.population)];
    double sum = 0.0;
    for (const auto& ind : state.population) {
        sum += ind.fitness;
    }
    state.history.push_back(generation_record{state.generation, b.fitness,
                                              sum / static_cast<double>(state.population.size()), b.genome,
                                              state.episodes, b.solved});
}

std::vector<individual> random_population(const evolution_state& state, const gp_config& cfg,
                                          const gene_pool& pool) {
    std::vector<individual> pop;
    for (std::size_t i = 0; i < cfg.population_size; ++i) {
        rng_engine rng = derive_stream(state.seed, state.epoch, state.generation, init_stream, i);
        pop.push_back(make_individual(random_tree(pool, cfg, rng), provenance::random));
    }
    return pop;
}

} // namespace

rng_engine derive_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t generation, std::uint64_t purpose,
                         std::uint64_t slot) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(epoch), hi(epoch), lo(generation), hi(generation),
                      lo(purpose),  hi(purpose), lo(slot),  hi(slot)};
    return rng_engine(seq);
}

void gp_config::check() const {
    const auto fail = [](const std::string& what) { throw std::invalid_argument("gp config: " + what); };
    if (population_size == 0) fail("population_size must be positive");
    if (elites > population_size) fail("elites exceed population_size");
    if (mutation_parents > population_size) fail("mutation_parents exceed population_size");
    if (crossover_parents > population_size) fail("crossover_parents exceed population_size");
    if (crossover_parents % 2 != 0) fail("crossover_parents must be even");
    if (max_mutations_per_individual == 0) fail("max_mutations_per_individual must be positive");
    if (tick_budget == 0) fail("tick_budget must be positive");
    if (max_repair_attempts == 0) fail("max_repair_attempts must be positive");
    if (initial_genes_min == 0 || initial_genes_min > initial_genes_max) fail("initial gene range is empty");
    const mutation_probabilities& m = mutation;
    for (double p : {m.add, m.remove, m.change}) {
        if (!std::isfinite(p) || p < 0.0) fail("mutation probabilities must be non-negative");
    }
    if (std::abs(m.add + m.remove + m.change - 1.0) > 1e-9) fail("mutation probabilities must sum to 1");
    for (double p : {control_node_probability, baseline_donor_probability}) {
        if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
    }
}

std::string_view to_string(provenance p) {
    switch (p) {
        case provenance::random:
            return "random";
        case provenance::mutant:
            return "mutant";
        case provenance::crossover:
            return "crossover";
        case provenance::baseline:
            return "baseline";
        case provenance::elite:
            return "elite";
    }
    return "random";
}

provenance provenance_from_string(std::string_view s) {
    for (provenance p : {provenance::random, provenance::mutant, provenance::crossover, provenance::baseline,
                         provenance::elite}) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

individual make_individual(behavior_tree tree, provenance origin) {
    individual ind;
    ind.genome = genome_text(tree);
    ind.tree = std::move(tree);
    ind.origin = origin;
    return ind;
}

const individual& evolution_state::best() const {
    if (population.empty()) {
        throw std::logic_error("empty population");
    }
    return population[best_index(population)];
}

evolution_state initialize(const gp_config& cfg, const evaluation_context& ctx, std::size_t jobs) {
    cfg.check();
    evolution_state state;
    state.seed = cfg.seed;
    state.population = random_population(state, cfg, ctx.pool);
    state.episodes += evaluate(state.population, ctx, state.cache, jobs);
    record_generation(state);
    return state;
}

void step_generation(evolution_state& state, const gp_config& cfg, const evaluation_context& ctx, std::size_t jobs) {
    cfg.check();
    if (state.population.empty()) {
        throw std::logic_error("step_generation on an uninitialized state");
    }
    const std::size_t g = state.generation + 1;
    const std::vector<double> fit = fitness_of(state.population);
    rng_engine select_rng = derive_stream(state.seed, state.epoch, g, select_stream, 0);

    std::set<std::string> seen;
    for (const auto& ind : state.population) {
        seen.insert(ind.genome);
    }
    // Redraws `make` until it yields an unseen genome or attempts run out.
    const auto fresh = [&](auto make) {
        behavior_tree t = make();
        for (std::size_t a = 1; !cfg.allow_identical && a < cfg.max_repair_attempts && seen.count(genome_text(t)); ++a) {
            t = make();
        }
        seen.insert(genome_text(t));
        return t;
    };

    std::vector<individual> offspring;
    const auto mutation_parents = tournament_select(fit, std::min(cfg.mutation_parents, fit.size()), select_rng);
    for (std::size_t k = 0; k < mutation_parents.size(); ++k) {
        for (std::size_t j = 0; j < cfg.mutation_offspring_per_parent; ++j) {
            rng_engine rng = derive_stream(state.seed, state.epoch, g, mutate_stream,
                                           k * cfg.mutation_offspring_per_parent + j);
            const behavior_tree& parent = state.population[mutation_parents[k]].tree;
            offspring.push_back(make_individual(
                fresh([&] { return mutate(parent, ctx.pool, cfg, rng, &state.mutations); }), provenance::mutant));
        }
    }

    auto crossover_parents = tournament_select(fit, std::min(cfg.crossover_parents, fit.size()), select_rng);
    std::shuffle(crossover_parents.begin(), crossover_parents.end(), select_rng);
    for (std::size_t q = 0; q + 1 < crossover_parents.size(); q += 2) {
        rng_engine rng = derive_stream(state.seed, state.epoch, g, crossover_stream, q / 2);
        const behavior_tree* a = &state.population[crossover_parents[q]].tree;
        const behavior_tree* b = &state.population[crossover_parents[q + 1]].tree;
        crossover_options opts;
        opts.max_repair_attempts = cfg.max_repair_attempts;
        opts.mode = cfg.crossover;
        if (!state.baselines.empty() && std::bernoulli_distribution(cfg.baseline_donor_probability)(rng)) {
            b = &state.baselines[std::uniform_int_distribution<std::size_t>(0, state.baselines.size() - 1)(rng)];
            opts.insert_b_as_first_child = state.hint == insertion_hint::first_child_of_root;
        }
        for (std::size_t r = 0; r < cfg.crossover_offspring_per_parent; ++r) {
            offspring.push_back(make_individual(fresh([&] { return crossover(*a, *b, rng, opts).first; }),
                                                provenance::crossover));
            offspring.push_back(make_individual(fresh([&] { return crossover(*a, *b, rng, opts).second; }),
                                                provenance::crossover));
        }
    }

    state.episodes += evaluate(offspring, ctx, state.cache, jobs);

    std::vector<individual> pool = std::move(state.population);
    pool.insert(pool.end(), std::make_move_iterator(offspring.begin()), std::make_move_iterator(offspring.end()));
    rng_engine survival_rng = derive_stream(state.seed, state.epoch, g, survival_stream, 0);

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), survival_rng);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return pool[x].fitness > pool[y].fitness; });
    const std::size_t n_elites = std::min(cfg.elites, cfg.population_size);
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_elites), order.end());
    std::sort(rest.begin(), rest.end());
    std::vector<double> rest_fit;
    for (std::size_t i : rest) {
        rest_fit.push_back(pool[i].fitness);
    }
    const std::size_t n_survivors = std::min(cfg.population_size - n_elites, rest.size());
    const auto survivors = tournament_select(rest_fit, n_survivors, survival_rng);

    std::vector<individual> next;
    for (std::size_t e = 0; e < n_elites; ++e) {
        next.push_back(pool[order[e]]);
        next.back().origin = provenance::elite;
    }
    for (std::size_t s : survivors) {
        next.push_back(std::move(pool[rest[s]]));
    }
    state.population = std::move(next);
    state.generation = g;
    record_generation(state);
}

void seed_baseline(evolution_state& state, const behavior_tree& baseline, const gp_config& cfg,
                   const evaluation_context& ctx, std::size_t jobs) {
    if (!is_valid(baseline)) {
        throw invalid_baseline("baseline tree violates the structural constraints: " + genome_text(baseline));
    }
    if (std::find(state.baselines.begin(), state.baselines.end(), baseline) == state.baselines.end()) {
        state.baselines.push_back(baseline);
    }
    std::vector<std::size_t> worst(state.population.size());
    std::iota(worst.begin(), worst.end(), std::size_t{0});
    std::stable_sort(worst.begin(), worst.end(), [&](std::size_t x, std::size_t y) {
        return state.population[x].fitness < state.population[y].fitness;
    });
    const std::size_t copies = std::min(std::max<std::size_t>(cfg.baseline_copies, 1), state.population.size());
    for (std::size_t c = 0; c < copies; ++c) {
        state.population[worst[c]] = make_individual(baseline, provenance::baseline);
    }
    state.episodes += evaluate(state.population, ctx, state.cache, jobs);
}

void fresh_start(evolution_state& state, const gp_config& cfg, const evaluation_context& ctx, std::size_t jobs) {
    cfg.check();
    ++state.epoch;
    state.baselines.clear();
    state.hint = insertion_hint::none;
    state.population = random_population(state, cfg, ctx.pool);
    state.episodes += evaluate(state.population, ctx, state.cache, jobs);
}

void reevaluate(evolution_state& state, const evaluation_context& ctx, std::size_t jobs) {
    state.cache.clear();
    for (auto& ind : state.population) {
        ind.evaluated = false;
    }
    state.episodes += evaluate(state.population, ctx, state.cache, jobs);
}

} // namespace kitbt
