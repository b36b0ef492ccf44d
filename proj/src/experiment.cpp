#include "kitbt/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "kitbt/serialization.hpp"

namespace kitbt {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw format_error("<document>", 0, field, message);
}

template <class Read>
auto nested(const std::string& prefix, Read read) {
    try {
        return read();
    } catch (const format_error& e) {
        throw format_error(e.source, e.line, prefix + e.field, e.message);
    }
}

void reject_unknown(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> known) {
    if (!j.is_object()) {
        fail(path.empty() ? "/" : path, "expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
            fail(path + "/" + it.key(), "unknown field");
        }
    }
}

experiment_phase phase_from_json(const nlohmann::json& j, const std::string& path, const fs::path& base_dir) {
    reject_unknown(j, path, {"evolve", "demo"});
    if (j.size() != 1) {
        fail(path, "expected exactly one of evolve, demo");
    }
    experiment_phase p;
    if (auto e = j.find("evolve"); e != j.end()) {
        if (!is_non_negative_integer(*e) || e->get<std::uint64_t>() == 0) {
            fail(path + "/evolve", "expected a positive generation count");
        }
        p.what = experiment_phase::kind::evolve;
        p.generations = e->get<std::size_t>();
        return p;
    }
    const nlohmann::json& d = j.at("demo");
    const std::string dp = path + "/demo";
    reject_unknown(d, dp, {"files", "goal_mode", "use_baseline", "insert_first_child", "subgoal_bonus", "fresh_start"});
    p.what = experiment_phase::kind::demo;
    auto files = d.find("files");
    if (files == d.end() || !files->is_array() || files->empty()) {
        fail(dp + "/files", "expected a non-empty list of demonstration files");
    }
    for (std::size_t i = 0; i < files->size(); ++i) {
        const std::string fp = dp + "/files/" + std::to_string(i);
        if (!(*files)[i].is_string()) {
            fail(fp, "expected a path");
        }
        const fs::path file = base_dir / (*files)[i].get<std::string>();
        if (!fs::is_regular_file(file)) {
            fail(fp, "demonstration file not found: " + file.string());
        }
        p.demo_files.push_back(file);
        p.demo_documents.push_back(read_json_file(file));
    }
    nlohmann::json flags = d;
    flags.erase("files");
    p.options = nested(dp, [&] { return demo_options_from_json(flags); });
    return p;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

} // namespace

std::size_t experiment_config::total_generations() const {
    std::size_t total = 0;
    for (const auto& p : phases) {
        total += p.generations;
    }
    return total;
}

experiment_config experiment_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    reject_unknown(j, "", {"name", "description", "scenario", "scenario_seed", "gp", "fitness", "phases"});
    experiment_config c;
    if (auto v = j.find("name"); v != j.end()) {
        if (!v->is_string()) {
            fail("/name", "expected a string");
        }
        c.name = v->get<std::string>();
    }
    auto sc = j.find("scenario");
    if (sc == j.end()) {
        fail("/scenario", "missing required field");
    }
    if (sc->is_string()) {
        const fs::path file = base_dir / sc->get<std::string>();
        if (!fs::is_regular_file(file)) {
            fail("/scenario", "scenario file not found: " + file.string());
        }
        c.scenario = load_document(file, [](const nlohmann::json& d) { return scenario_from_json(d); });
    } else {
        c.scenario = nested("/scenario", [&] { return scenario_from_json(*sc); });
    }
    if (auto v = j.find("scenario_seed"); v != j.end() && !v->is_null()) {
        if (!is_non_negative_integer(*v)) {
            fail("/scenario_seed", "expected a non-negative integer or null");
        }
        c.scenario_seed = v->get<std::uint64_t>();
    }
    if (auto v = j.find("gp"); v != j.end()) {
        c.gp = nested("/gp", [&] { return gp_config_from_json(*v); });
    }
    if (auto v = j.find("fitness"); v != j.end()) {
        c.fitness = nested("/fitness", [&] { return fitness_params_from_json(*v); });
    }
    auto phases = j.find("phases");
    if (phases == j.end() || !phases->is_array() || phases->empty()) {
        fail("/phases", "expected a non-empty list of phases");
    }
    for (std::size_t i = 0; i < phases->size(); ++i) {
        c.phases.push_back(phase_from_json((*phases)[i], "/phases/" + std::to_string(i), base_dir));
    }
    return c;
}

experiment_config load_experiment(const fs::path& path) {
    experiment_config c = load_document(path, [&](const nlohmann::json& d) {
        return experiment_from_json(d, path.parent_path());
    });
    c.source = path;
    if (c.name.empty()) {
        c.name = path.stem().string();
    }
    return c;
}

experiment_run run_experiment(const experiment_config& config, std::uint64_t seed, std::size_t jobs,
                              const fs::path& store) {
    session_config sc;
    sc.scenario = config.scenario;
    sc.scenario_seed = config.scenario_seed.value_or(seed);
    sc.gp = config.gp;
    sc.gp.seed = seed;
    sc.fitness = config.fitness;
    sc.jobs = std::max<std::size_t>(1, jobs);
    session s("seed-" + std::to_string(seed), sc, store);

    experiment_run run;
    run.seed = seed;
    for (const auto& phase : config.phases) {
        phase_result pr;
        if (phase.what == experiment_phase::kind::evolve) {
            s.start_gp(phase.generations);
            s.wait_settled();
            if (!s.last_error().empty()) {
                throw std::runtime_error("seed " + std::to_string(seed) + ": " + s.last_error());
            }
        } else {
            std::vector<demonstration> demos;
            for (std::size_t i = 0; i < phase.demo_documents.size(); ++i) {
                try {
                    demos.push_back(demonstration_from_document(phase.demo_documents[i], config.scenario));
                } catch (const format_error& e) {
                    throw format_error(phase.demo_files[i].string(), e.line, e.field, e.message);
                }
            }
            pr.demo = s.add_demonstrations(demos, phase.options);
        }
        pr.end_generation = s.generation();
        run.phases.push_back(std::move(pr));
    }
    run.history = s.history();
    run.best = *s.best();
    run.final_goal = s.goal();
    run.pool_id = s.pool_id();
    return run;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    auto number = [&](const std::string& item) {
        if (item.empty() || !std::all_of(item.begin(), item.end(), [](unsigned char c) { return std::isdigit(c); })) {
            throw std::invalid_argument("bad seed '" + item + "' in '" + text + "'");
        }
        return std::stoull(item);
    };
    if (text.find(',') == std::string::npos) {
        const std::uint64_t n = number(text);
        if (n == 0) {
            throw std::invalid_argument("seed count must be positive");
        }
        for (std::uint64_t i = 0; i < n; ++i) {
            seeds.push_back(i);
        }
        return seeds;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        seeds.push_back(number(item));
    }
    return seeds;
}

std::vector<aggregate_row> aggregate(const std::vector<experiment_run>& runs) {
    std::vector<aggregate_row> rows;
    if (runs.empty()) {
        return rows;
    }
    const std::size_t n = runs.front().history.size();
    for (const auto& r : runs) {
        if (r.history.size() != n) {
            throw std::invalid_argument("runs have different lengths");
        }
    }
    for (std::size_t g = 0; g < n; ++g) {
        std::vector<double> best, mean;
        std::size_t solved = 0;
        for (const auto& r : runs) {
            best.push_back(r.history[g].best_fitness);
            mean.push_back(r.history[g].mean_fitness);
            solved += r.history[g].best_solved ? 1 : 0;
        }
        aggregate_row row;
        row.generation = runs.front().history[g].generation;
        row.mean_best = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
        row.median_best = median(best);
        row.mean_mean = std::accumulate(mean.begin(), mean.end(), 0.0) / static_cast<double>(mean.size());
        row.median_mean = median(mean);
        row.solved_fraction = static_cast<double>(solved) / static_cast<double>(runs.size());
        rows.push_back(row);
    }
    return rows;
}

std::string aggregate_csv(const std::vector<aggregate_row>& rows) {
    std::string out = "generation,mean_best_fitness,median_best_fitness,mean_mean_fitness,median_mean_fitness,solved_fraction\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f,%.4f\n", r.generation, r.mean_best, r.median_best,
                      r.mean_mean, r.median_mean, r.solved_fraction);
        out += buf;
    }
    return out;
}

} // namespace kitbt
