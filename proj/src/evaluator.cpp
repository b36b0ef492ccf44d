#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "kitbt/gp.hpp"

namespace kitbt {

evaluation_context evaluation_context::make(scenario_config scenario, std::uint64_t scenario_seed,
                                            fitness_params fitness, std::size_t tick_budget,
                                            const pool_config& pool) {
    fitness.check();
    evaluation_context ctx;
    ctx.pool = generate_pool(scenario, pool);
    ctx.initial = reset(scenario, scenario_seed);
    ctx.goal = scenario.goal;
    if (fitness.subgoals.empty()) {
        fitness.subgoals = scenario.subgoals;
    }
    ctx.fitness = std::move(fitness);
    ctx.env.tolerance = scenario.tolerance;
    ctx.scenario = std::move(scenario);
    ctx.scenario_seed = scenario_seed;
    ctx.tick_budget = tick_budget;
    return ctx;
}

episode_outcome run_episode(const evaluation_context& ctx, const behavior_tree& tree, const episode_watcher& watch) {
    episode_outcome out;
    out.final_world = ctx.initial;
    kitting_environment env(out.final_world, ctx.env, ctx.fitness.subgoals);
    tick_observer observer;
    if (watch) {
        observer = [&](std::size_t id, status s) { watch(id, s, out.final_world); };
    }
    out.run = run_to_completion(tree, env, ctx.tick_budget, observer);
    out.terms = fitness_terms_for(out.final_world, ctx.goal, ctx.fitness.length == length_metric::expanded ? ctx.pool.expanded_size(tree) : size(tree), out.run,
                                  env.subgoal_bonus());
    out.fitness = score(out.terms, ctx.fitness);
    out.solved = out.run.final_status == status::success && goal_satisfied(out.final_world, ctx.goal);
    return out;
}

std::uint64_t evaluate(std::vector<individual>& population, const evaluation_context& ctx, fitness_cache& cache,
                       std::size_t jobs) {
    std::vector<const individual*> pending;
    {
        std::vector<std::string> queued;
        for (auto& ind : population) {
            if (ind.evaluated || cache.count(ind.genome) != 0) {
                continue;
            }
            if (std::find(queued.begin(), queued.end(), ind.genome) == queued.end()) {
                queued.push_back(ind.genome);
                pending.push_back(&ind);
            }
        }
    }

    std::vector<cached_fitness> results(pending.size());
    const auto work = [&](std::size_t i) {
        const episode_outcome o = run_episode(ctx, pending[i]->tree);
        results[i] = cached_fitness{o.terms, o.fitness, o.solved};
    };
    const std::size_t workers = std::min(std::max<std::size_t>(jobs, 1), pending.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < pending.size(); ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < pending.size(); i = next++) {
                    try {
                        work(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    for (std::size_t i = 0; i < pending.size(); ++i) {
        cache.emplace(pending[i]->genome, results[i]);
    }
    for (auto& ind : population) {
        if (ind.evaluated) {
            continue;
        }
        const cached_fitness& c = cache.at(ind.genome);
        ind.terms = c.terms;
        ind.fitness = c.fitness;
        ind.solved = c.solved;
        ind.evaluated = true;
    }
    return pending.size();
}

} // namespace kitbt
