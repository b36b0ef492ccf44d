#pragma once

// Interactive learning sessions: GP phases alternate with demonstration
// phases, every generation is checkpointed, and progress is published as an
// append-only event log.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kitbt/gp.hpp"
#include "kitbt/lfd.hpp"

namespace kitbt {

enum class session_phase { idle, evolving, paused, demonstrating };

std::string_view to_string(session_phase p);
session_phase session_phase_from_string(std::string_view s);

class invalid_phase_transition : public std::runtime_error {
public:
    invalid_phase_transition(session_phase phase, const std::string& action)
        : std::runtime_error("cannot " + action + " while " + std::string(to_string(phase))), phase(phase) {}
    session_phase phase;
};
class unknown_session : public std::runtime_error {
public:
    explicit unknown_session(const std::string& id) : std::runtime_error("unknown session: " + id), id(id) {}
    std::string id;
};
class unknown_scenario : public std::runtime_error {
public:
    explicit unknown_scenario(const std::string& ref) : std::runtime_error("unknown scenario: " + ref), ref(ref) {}
    std::string ref;
};

struct session_config {
    scenario_config scenario;
    std::uint64_t scenario_seed = 0;
    gp_config gp;
    fitness_params fitness;
    std::size_t jobs = 1;
};

nlohmann::json to_json(const session_config& c);
/// `scenarios_dir` resolves a scenario given by name; inline scenarios need none.
session_config session_config_from_json(const nlohmann::json& j, const std::filesystem::path& scenarios_dir = {});

/// How inferred goals combine with the session goal.
enum class goal_mode { keep, extend, replace };

std::string_view to_string(goal_mode m);
goal_mode goal_mode_from_string(std::string_view s);

struct demo_options {
    // extend adds inferred targets for objects the goal does not mention yet.
    goal_mode goal = goal_mode::extend;
    bool use_baseline = true;
    bool first_child_hint = false;
    std::optional<double> subgoal_bonus; // rewards reaching the inferred goals
    bool fresh_start = false;

    friend bool operator==(const demo_options&, const demo_options&) = default;
};

nlohmann::json to_json(const demo_options& o);
demo_options demo_options_from_json(const nlohmann::json& j);

struct demo_result {
    task_constraints constraints;
    std::optional<behavior_tree> baseline;
    goal_spec goal;
    bool goal_changed = false;
};

struct session_event {
    std::uint64_t seq = 0;
    std::string type; // created, started, generation, paused, resumed, completed, demo, recovered, error
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
    session_phase phase = session_phase::idle;
    std::string message;

    friend bool operator==(const session_event&, const session_event&) = default;
};

nlohmann::json to_json(const session_event& e);
session_event session_event_from_json(const nlohmann::json& j);

struct trace_step {
    std::size_t tick = 0;
    std::vector<std::pair<std::size_t, status>> statuses; // node id, result; in evaluation order
    world_state world;                                    // after the tick
};

struct episode_trace {
    std::vector<trace_step> steps;
    run_result run;
    fitness_terms terms;
    double fitness = 0.0;
    bool solved = false;
    double goal_distance_mm = 0.0;
};

nlohmann::json to_json(const episode_trace& t);

/// One episode of `tree` from the initial world of `ctx`, tick by tick.
episode_trace trace_episode(const evaluation_context& ctx, const behavior_tree& tree);

class session {
public:
    /// A new idle session; `store` empty keeps it in memory only.
    session(std::string id, session_config config, std::filesystem::path store = {});
    /// Reopens a stored session. A session that was evolving comes back paused.
    static std::unique_ptr<session> open(const std::filesystem::path& store);
    /// Stops the worker at the next generation boundary.
    ~session();

    session(const session&) = delete;
    session& operator=(const session&) = delete;

    const std::string& id() const { return id_; }
    session_phase phase() const;
    std::vector<std::string> allowed_actions() const;

    /// idle or paused -> evolving, for `generations` more generations; the
    /// first start also builds the initial population (generation 0).
    void start_gp(std::size_t generations);
    /// Requests a pause; the worker honors it at the next generation boundary.
    void pause_gp();
    /// paused -> evolving toward the outstanding generation target.
    void resume_gp();
    /// Blocks until the session is not evolving.
    void wait_settled() const;

    demo_result add_demonstrations(const std::vector<demonstration>& demos, const demo_options& options);

    std::optional<individual> best() const;
    std::vector<generation_record> history() const;
    std::size_t generation() const;
    std::size_t target_generation() const;
    std::uint64_t episodes() const;
    goal_spec goal() const;
    fitness_params fitness() const;
    const session_config& config() const { return config_; }
    std::size_t demo_count() const;
    std::string last_error() const;
    std::string pool_id() const;

    /// Traces `tree`, or the current best tree, in a fresh copy of the world.
    episode_trace run_tree(const std::optional<behavior_tree>& tree = std::nullopt) const;

    std::vector<session_event> events(std::uint64_t from_seq = 0) const;
    /// Waits until an event with seq >= from_seq exists; false on timeout.
    bool wait_for_event(std::uint64_t from_seq, std::chrono::milliseconds timeout) const;

    /// Read-only summary: phase, progress, goal, best tree, initial world.
    nlohmann::json summary() const;

    /// Full evolution state; the session must not be evolving.
    evolution_state state() const;

private:
    struct published_view {
        std::optional<individual> best;
        std::vector<generation_record> history;
        std::size_t generation = 0;
        std::uint64_t episodes = 0;
    };

    session() = default;
    void launch_worker();
    void worker_main();
    void publish_locked();
    void emit_locked(const std::string& type, const std::string& message = {});
    void persist_meta_locked() const;
    void persist_state() const;
    bool initialized() const { return !state_.population.empty(); }

    std::string id_;
    session_config config_;
    std::filesystem::path store_;

    // Owned by whichever thread holds the phase transition (worker while
    // evolving, the caller while demonstrating); others read `view_`.
    evolution_state state_;
    evaluation_context ctx_;
    std::vector<demonstration> demos_;

    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    session_phase phase_ = session_phase::idle;
    std::size_t target_ = 0;
    bool pause_requested_ = false;
    bool stopping_ = false;
    std::string last_error_;
    published_view view_;
    std::vector<session_event> events_;
    std::thread worker_;
};

/// Owns the sessions stored under one root directory.
class session_manager {
public:
    /// `root` empty keeps sessions in memory only.
    explicit session_manager(std::filesystem::path root = {}, std::filesystem::path scenarios_dir = {});

    /// Body {scenario: name | object, scenario_seed?, gp?, fitness?, jobs?}.
    std::string create(const nlohmann::json& request);
    std::string create(session_config config);
    std::shared_ptr<session> get(const std::string& id) const;
    std::vector<std::string> list() const;
    const std::filesystem::path& scenarios_dir() const { return scenarios_dir_; }

private:
    std::filesystem::path root_;
    std::filesystem::path scenarios_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<session>> sessions_;
    std::uint64_t next_ = 1;
};

} // namespace kitbt
