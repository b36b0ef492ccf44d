// kitbt: run experiments, replay saved trees, serve sessions over HTTP.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "kitbt/experiment.hpp"
#include "kitbt/serialization.hpp"
#include "kitbt/service.hpp"

namespace fs = std::filesystem;
using namespace kitbt;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_unsolved = 1;
constexpr int exit_config = 2;

int cmd_run(const fs::path& config_path, const std::string& seed_text, const fs::path& out, std::size_t jobs) {
    const experiment_config config = load_experiment(config_path);
    std::vector<std::uint64_t> seeds;
    try {
        seeds = parse_seed_list(seed_text);
    } catch (const std::invalid_argument& e) {
        std::cerr << "--seeds: " << e.what() << "\n";
        return exit_config;
    }
    jobs = std::max<std::size_t>(1, std::min(jobs, seeds.size()));

    std::vector<experiment_run> runs(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex print;
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                runs[i] = run_experiment(config, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
                continue;
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::lock_guard lock(print);
            std::printf("seed %llu: best %.1f %s after %zu generations (%.1fs)\n",
                        static_cast<unsigned long long>(seeds[i]), runs[i].best.fitness,
                        runs[i].best.solved ? "solved" : "unsolved", runs[i].history.back().generation, secs);
            std::fflush(stdout);
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    // Written after all seeds finish so the output does not depend on timing.
    nlohmann::json summary{{"experiment", config.name}, {"runs", nlohmann::json::array()}};
    bool all_solved = true;
    for (const auto& r : runs) {
        const fs::path dir = out / ("seed_" + std::to_string(r.seed));
        std::string log;
        for (const auto& g : r.history) {
            log += run_log_line(g) + "\n";
        }
        write_text_file(dir / "run.jsonl", log);
        write_text_file(dir / "best_tree.json", tree_file(r.best.tree, r.pool_id).dump(1) + "\n");
        nlohmann::json phases = nlohmann::json::array();
        for (const auto& p : r.phases) {
            nlohmann::json pj{{"end_generation", p.end_generation}};
            if (p.demo) {
                pj["inferred"] = to_json(p.demo->constraints);
                pj["baseline"] = p.demo->baseline ? nlohmann::json(genome_text(*p.demo->baseline)) : nlohmann::json(nullptr);
            }
            phases.push_back(std::move(pj));
        }
        summary["runs"].push_back({{"seed", r.seed},
                                   {"best_fitness", r.best.fitness},
                                   {"solved", r.best.solved},
                                   {"best_genome", r.best.genome},
                                   {"terms", to_json(r.best.terms)},
                                   {"episodes", r.history.back().episodes_so_far},
                                   {"final_goal", to_json(r.final_goal)},
                                   {"phases", std::move(phases)}});
        all_solved = all_solved && r.best.solved;
    }
    write_text_file(out / "aggregate.csv", aggregate_csv(aggregate(runs)));
    write_text_file(out / "summary.json", summary.dump(1) + "\n");
    std::printf("%zu run(s) written to %s\n", runs.size(), out.string().c_str());
    return all_solved ? exit_ok : exit_unsolved;
}

int cmd_replay(const fs::path& tree_path, const fs::path& scenario_path, std::uint64_t seed, const fs::path& trace_out) {
    const scenario_config scenario = load_document(scenario_path, [](const nlohmann::json& j) { return scenario_from_json(j); });
    const evaluation_context ctx = evaluation_context::make(scenario, seed, {}, default_tick_budget);
    const behavior_tree tree = load_document(tree_path, [&](const nlohmann::json& j) { return tree_from_file(j, ctx.pool.id()); });
    const episode_trace trace = trace_episode(ctx, tree);
    std::printf("status %s\nticks %zu%s\ngoal distance %.3f mm\nfitness %.3f\nverdict %s\n",
                std::string(to_string(trace.run.final_status)).c_str(), trace.run.ticks,
                trace.run.timed_out ? " (timed out)" : "", trace.goal_distance_mm, trace.fitness,
                trace.solved ? "solved" : "unsolved");
    if (!trace_out.empty()) {
        write_text_file(trace_out, to_json(trace).dump() + "\n");
    }
    return trace.solved ? exit_ok : exit_unsolved;
}

std::atomic<service*> running_service{nullptr};

int cmd_serve(const std::string& host, int port, const fs::path& root, const fs::path& scenarios) {
    session_manager sessions(root, scenarios);
    service svc(sessions);
    running_service = &svc;
    std::signal(SIGINT, [](int) {
        if (service* s = running_service.load()) {
            s->stop();
        }
    });
    std::printf("serving %zu stored session(s) on http://%s:%d\n", sessions.list().size(), host.c_str(), port);
    std::fflush(stdout);
    svc.run(host, port);
    running_service = nullptr;
    return exit_ok;
}

int cmd_pool(const fs::path& scenario_path) {
    const scenario_config scenario = load_document(scenario_path, [](const nlohmann::json& j) { return scenario_from_json(j); });
    std::cout << pool_manifest(generate_pool(scenario)).dump(1) << "\n";
    return exit_ok;
}

int cmd_record(const fs::path& scenario_path, const fs::path& script_path, const fs::path& out) {
    const scenario_config scenario = load_document(scenario_path, [](const nlohmann::json& j) { return scenario_from_json(j); });
    const demonstration demo =
        load_document(script_path, [&](const nlohmann::json& j) { return demonstration_from_document(j, scenario); });
    const std::string text = to_json(demo).dump(1) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text_file(out, text);
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn kitting behavior trees with genetic programming and demonstrations"};
    app.require_subcommand(1);

    fs::path config, out, tree, scenario, trace_out, root, scenarios, script, record_out;
    std::string seeds = "10", host = "127.0.0.1";
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
    int port = 8080;

    auto* run = app.add_subcommand("run", "Run an experiment script for several seeds");
    run->add_option("--config", config, "Experiment config file")->required();
    run->add_option("--seeds", seeds, "Seed count n (seeds 0..n-1) or a comma-separated list");
    run->add_option("--out", out, "Output directory")->required();
    run->add_option("--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);

    auto* replay = app.add_subcommand("replay", "Run a saved tree once and report the outcome");
    replay->add_option("--tree", tree, "Saved tree file")->required();
    replay->add_option("--scenario", scenario, "Scenario file")->required();
    replay->add_option("--seed", seed, "World seed");
    replay->add_option("--trace", trace_out, "Write the tick-by-tick trace here");

    auto* serve = app.add_subcommand("serve", "Serve sessions over HTTP");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--root", root, "Session store directory (empty: in memory)");
    serve->add_option("--scenarios", scenarios, "Directory of named scenarios");

    auto* pool = app.add_subcommand("pool", "Print the gene pool manifest of a scenario");
    pool->add_option("--scenario", scenario, "Scenario file")->required();

    auto* rec = app.add_subcommand("record", "Execute a demonstration script and print the recording");
    rec->add_option("--scenario", scenario, "Scenario file")->required();
    rec->add_option("--script", script, "Demonstration script")->required();
    rec->add_option("--out", record_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) return cmd_run(config, seeds, out, jobs);
        if (*replay) return cmd_replay(tree, scenario, seed, trace_out);
        if (*serve) return cmd_serve(host, port, root, scenarios);
        if (*pool) return cmd_pool(scenario);
        if (*rec) return cmd_record(scenario, script, record_out);
    } catch (const std::exception& e) {
        // Format, scenario and world errors all mean the inputs are unusable.
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_config;
}
