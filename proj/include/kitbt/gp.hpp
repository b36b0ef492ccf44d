#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kitbt/behavior_tree.hpp"
#include "kitbt/gene_pool.hpp"
#include "kitbt/kitting_env.hpp"
#include "kitbt/scenario.hpp"

namespace kitbt {

using rng_engine = std::mt19937_64;

/// Independent stream for (seed, epoch, generation, purpose, slot).
rng_engine derive_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t generation, std::uint64_t purpose,
                         std::uint64_t slot);

enum class crossover_mode { swap, insert };

struct mutation_probabilities {
    double add = 0.10;
    double remove = 0.50;
    double change = 0.40;

    friend bool operator==(const mutation_probabilities&, const mutation_probabilities&) = default;
};

struct gp_config {
    std::size_t population_size = 16;
    std::size_t mutation_parents = 12;
    std::size_t mutation_offspring_per_parent = 2;
    std::size_t max_mutations_per_individual = 3;
    mutation_probabilities mutation;
    std::size_t crossover_parents = 4;
    std::size_t crossover_offspring_per_parent = 2;
    std::size_t elites = 2;
    std::size_t tick_budget = default_tick_budget;
    std::uint64_t seed = 0;
    // Probability that an added or changed node is a control node.
    double control_node_probability = 0.3;
    // Probability that a crossover pair takes one partner from the baselines.
    double baseline_donor_probability = 0.5;
    std::size_t baseline_copies = 1;
    std::size_t max_repair_attempts = 25;
    // When false, an offspring equal to a population member or to an earlier
    // offspring of the same generation is redrawn (up to max_repair_attempts).
    bool allow_identical = false;
    crossover_mode crossover = crossover_mode::insert;
    std::size_t initial_genes_min = 1;
    std::size_t initial_genes_max = 4;

    /// Throws std::invalid_argument when an invariant is broken.
    void check() const;

    friend bool operator==(const gp_config&, const gp_config&) = default;
};

// How L counts a composite gene: as its full expansion or as one node.
enum class length_metric { expanded, nodes };

std::string_view to_string(length_metric m);
length_metric length_metric_from_string(std::string_view s);

struct fitness_params {
    double length_penalty = 10.0;
    double timeout_penalty = 30.0;
    double failure_penalty = 50.0;
    std::vector<subgoal_spec> subgoals;
    length_metric length = length_metric::expanded;

    void check() const;

    friend bool operator==(const fitness_params&, const fitness_params&) = default;
};

struct fitness_terms {
    double distance_mm = 0.0;
    std::size_t length = 0;
    bool timed_out = false;
    bool failed = false;
    double bonus = 0.0;

    friend bool operator==(const fitness_terms&, const fitness_terms&) = default;
};

/// -distance - lambda*L - tau*T - phi*F + bonus, summed in that order.
double score(const fitness_terms& terms, const fitness_params& params);

fitness_terms fitness_terms_for(const world_state& after_run, const goal_spec& goal, std::size_t length,
                                const run_result& run, double bonus = 0.0);

/// Fitness of a finished episode with L = size(tree).
double fitness(const world_state& after_run, const goal_spec& goal, const behavior_tree& tree, const run_result& run,
               const fitness_params& params);

enum class provenance { random, mutant, crossover, baseline, elite };

std::string_view to_string(provenance p);
provenance provenance_from_string(std::string_view s);

struct individual {
    behavior_tree tree;
    std::string genome;
    fitness_terms terms;
    double fitness = 0.0;
    bool solved = false;
    bool evaluated = false;
    provenance origin = provenance::random;
};

individual make_individual(behavior_tree tree, provenance origin);

// ---- evaluation ---------------------------------------------------------

struct evaluation_context {
    scenario_config scenario;
    std::uint64_t scenario_seed = 0;
    goal_spec goal;
    fitness_params fitness;
    gene_pool pool;
    std::size_t tick_budget = default_tick_budget;
    env_options env;
    world_state initial; // reset(scenario, scenario_seed)

    static evaluation_context make(scenario_config scenario, std::uint64_t scenario_seed, fitness_params fitness,
                                   std::size_t tick_budget, const pool_config& pool = {});
};

struct episode_outcome {
    fitness_terms terms;
    double fitness = 0.0;
    bool solved = false;
    run_result run;
    world_state final_world;
};

/// Sees every node result of every tick together with the episode's world.
using episode_watcher = std::function<void(std::size_t node_id, status result, const world_state& world)>;

/// One fresh episode from the context's initial world.
episode_outcome run_episode(const evaluation_context& ctx, const behavior_tree& tree, const episode_watcher& watch = {});

struct cached_fitness {
    fitness_terms terms;
    double fitness = 0.0;
    bool solved = false;

    friend bool operator==(const cached_fitness&, const cached_fitness&) = default;
};

using fitness_cache = std::map<std::string, cached_fitness>;

/// Fills in every unevaluated individual. Distinct genomes not in `cache` are
/// simulated (in parallel when jobs > 1); the result does not depend on jobs.
/// Returns the number of episodes simulated.
std::uint64_t evaluate(std::vector<individual>& population, const evaluation_context& ctx, fitness_cache& cache,
                       std::size_t jobs = 1);

// ---- reproduction -------------------------------------------------------

struct mutation_counts {
    std::uint64_t add = 0;
    std::uint64_t remove = 0;
    std::uint64_t change = 0;
    std::uint64_t total() const { return add + remove + change; }
};

behavior_tree random_tree(const gene_pool& pool, const gp_config& cfg, rng_engine& rng);

/// 1..max point mutations (add/remove/change), resampled until the result is
/// structurally valid; after max_repair_attempts the parent is returned.
behavior_tree mutate(const behavior_tree& parent, const gene_pool& pool, const gp_config& cfg, rng_engine& rng,
                     mutation_counts* counts = nullptr);

struct crossover_options {
    crossover_mode mode = crossover_mode::insert;
    // Donate all of `b` as the first child of a's root (demonstrated baseline).
    bool insert_b_as_first_child = false;
    std::size_t max_repair_attempts = 25;
};

/// swap: the children exchange a random subtree of each parent. insert: each
/// child is its parent with a random subtree of the other parent inserted at
/// a random point.
std::pair<behavior_tree, behavior_tree> crossover(const behavior_tree& a, const behavior_tree& b, rng_engine& rng,
                                                  const crossover_options& options = {});

/// Pairwise elimination: the worst is dropped first, then random pairs meet
/// and the weaker one (ties by coin) drops out until `n_survivors` remain.
/// Returns indices in ascending order.
std::vector<std::size_t> tournament_select(const std::vector<double>& fitness, std::size_t n_survivors,
                                           rng_engine& rng);

// ---- generational loop --------------------------------------------------

struct generation_record {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    std::string best_genome;
    std::uint64_t episodes_so_far = 0;
    bool best_solved = false;

    friend bool operator==(const generation_record&, const generation_record&) = default;
};

enum class insertion_hint { none, first_child_of_root };

struct evolution_state {
    std::size_t generation = 0;
    std::uint64_t seed = 0;
    std::uint64_t epoch = 0; // bumped by every fresh start
    std::vector<individual> population;
    std::vector<generation_record> history;
    std::vector<behavior_tree> baselines;
    insertion_hint hint = insertion_hint::none;
    fitness_cache cache;
    std::uint64_t episodes = 0;
    mutation_counts mutations;

    const individual& best() const;
};

class invalid_baseline : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Random population, evaluated, with the generation-0 history record.
evolution_state initialize(const gp_config& cfg, const evaluation_context& ctx, std::size_t jobs = 1);

/// Mutation and crossover offspring, evaluation, elitism plus tournament
/// survival back to population_size, one history record.
void step_generation(evolution_state& state, const gp_config& cfg, const evaluation_context& ctx,
                     std::size_t jobs = 1);

/// Registers a baseline and swaps copies of it in for the worst individuals.
void seed_baseline(evolution_state& state, const behavior_tree& baseline, const gp_config& cfg,
                   const evaluation_context& ctx, std::size_t jobs = 1);

/// Replaces the population by a new random one and forgets baselines and the
/// insertion hint; history and the fitness cache stay.
void fresh_start(evolution_state& state, const gp_config& cfg, const evaluation_context& ctx, std::size_t jobs = 1);

/// Clears the fitness cache and re-scores the population, e.g. after a goal change.
void reevaluate(evolution_state& state, const evaluation_context& ctx, std::size_t jobs = 1);

} // namespace kitbt
