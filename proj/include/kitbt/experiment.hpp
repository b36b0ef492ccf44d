#pragma once

// Declarative experiment scripts: a scenario, GP settings and a list of
// phases (evolve N generations, inject demonstrations) run per seed through
// a session.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kitbt/session.hpp"

namespace kitbt {

struct experiment_phase {
    enum class kind { evolve, demo };
    kind what = kind::evolve;
    std::size_t generations = 0;                 // evolve
    std::vector<std::filesystem::path> demo_files; // demo, resolved against the config
    std::vector<nlohmann::json> demo_documents;  // demo, loaded with the config
    demo_options options;                        // demo
};

struct experiment_config {
    std::string name;
    std::filesystem::path source; // the config file, when loaded from one
    scenario_config scenario;
    // Fixed world seed; unset means each run uses its own seed.
    std::optional<std::uint64_t> scenario_seed;
    gp_config gp;
    fitness_params fitness;
    std::vector<experiment_phase> phases;

    std::size_t total_generations() const;
};

/// Paths inside the document are relative to `base_dir`.
experiment_config experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Format errors carry the file, line and field.
experiment_config load_experiment(const std::filesystem::path& path);

struct phase_result {
    std::size_t end_generation = 0; // generation reached when the phase ended
    std::optional<demo_result> demo;
};

struct experiment_run {
    std::uint64_t seed = 0;
    std::vector<generation_record> history;
    std::vector<phase_result> phases;
    individual best;
    goal_spec final_goal;
    std::string pool_id;
};

/// The run for one seed. `store` empty keeps the session in memory.
experiment_run run_experiment(const experiment_config& config, std::uint64_t seed, std::size_t jobs = 1,
                              const std::filesystem::path& store = {});

/// "0,3,7" lists seeds; a single number n means seeds 0..n-1.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

struct aggregate_row {
    std::size_t generation = 0;
    double mean_best = 0.0;
    double median_best = 0.0;
    double mean_mean = 0.0;
    double median_mean = 0.0;
    double solved_fraction = 0.0;
};

/// Per-generation statistics across runs of equal length.
std::vector<aggregate_row> aggregate(const std::vector<experiment_run>& runs);
std::string aggregate_csv(const std::vector<aggregate_row>& rows);

} // namespace kitbt
