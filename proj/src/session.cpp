#include "kitbt/session.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "kitbt/serialization.hpp"

namespace kitbt {

namespace fs = std::filesystem;

namespace {

constexpr int session_format_version = 1;

// Adds `prefix` to the field path of format errors raised by `read`.
template <class Read>
auto nested(const std::string& prefix, Read read) {
    try {
        return read();
    } catch (const format_error& e) {
        throw format_error(e.source, e.line, prefix + e.field, e.message);
    }
}

void append_line(const fs::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw std::runtime_error("cannot append to " + path.string());
    }
    out << line << '\n';
    out.flush();
}

// Lines of a log file; a torn last line from an interrupted write is dropped.
std::vector<nlohmann::json> read_log(const fs::path& path) {
    std::vector<nlohmann::json> out;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error&) {
            break;
        }
    }
    return out;
}

std::vector<std::string> actions_for(session_phase p) {
    switch (p) {
        case session_phase::idle:
            return {"start", "demos", "run-tree"};
        case session_phase::evolving:
            return {"pause", "run-tree"};
        case session_phase::paused:
            return {"start", "resume", "demos", "run-tree"};
        case session_phase::demonstrating:
            return {"run-tree"};
    }
    return {};
}

} // namespace

std::string_view to_string(session_phase p) {
    switch (p) {
        case session_phase::idle:
            return "idle";
        case session_phase::evolving:
            return "evolving";
        case session_phase::paused:
            return "paused";
        case session_phase::demonstrating:
            return "demonstrating";
    }
    return "?";
}

session_phase session_phase_from_string(std::string_view s) {
    for (session_phase p : {session_phase::idle, session_phase::evolving, session_phase::paused,
                            session_phase::demonstrating}) {
        if (to_string(p) == s) {
            return p;
        }
    }
    throw std::invalid_argument("unknown session phase: " + std::string(s));
}

std::string_view to_string(goal_mode m) {
    switch (m) {
        case goal_mode::keep:
            return "keep";
        case goal_mode::extend:
            return "extend";
        case goal_mode::replace:
            return "replace";
    }
    return "?";
}

goal_mode goal_mode_from_string(std::string_view s) {
    for (goal_mode m : {goal_mode::keep, goal_mode::extend, goal_mode::replace}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw std::invalid_argument("unknown goal mode: " + std::string(s));
}

// ---- documents ----------------------------------------------------------

nlohmann::json to_json(const session_config& c) {
    return {{"scenario", to_json(c.scenario)},
            {"scenario_seed", c.scenario_seed},
            {"gp", to_json(c.gp)},
            {"fitness", to_json(c.fitness)},
            {"jobs", c.jobs}};
}

session_config session_config_from_json(const nlohmann::json& j, const fs::path& scenarios_dir) {
    if (!j.is_object()) {
        throw format_error("<document>", 0, "/", "expected an object");
    }
    static const std::set<std::string> known{"scenario", "scenario_seed", "gp", "fitness", "jobs"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw format_error("<document>", 0, "/" + it.key(), "unknown field");
        }
    }
    session_config c;
    auto sc = j.find("scenario");
    if (sc == j.end()) {
        throw format_error("<document>", 0, "/scenario", "missing required field");
    }
    if (sc->is_string()) {
        const std::string ref = sc->get<std::string>();
        fs::path file = scenarios_dir.empty() ? fs::path(ref) : scenarios_dir / ref;
        if (!fs::exists(file) && file.extension() != ".json") {
            file += ".json";
        }
        const bool plain_name = ref.find('/') == std::string::npos && ref.find("..") == std::string::npos;
        if (!plain_name || !fs::is_regular_file(file)) {
            throw unknown_scenario(ref);
        }
        c.scenario = load_document(file, [](const nlohmann::json& d) { return scenario_from_json(d); });
    } else {
        c.scenario = nested("/scenario", [&] { return scenario_from_json(*sc); });
    }
    if (auto v = j.find("scenario_seed"); v != j.end()) {
        if (!is_non_negative_integer(*v)) {
            throw format_error("<document>", 0, "/scenario_seed", "expected a non-negative integer");
        }
        c.scenario_seed = v->get<std::uint64_t>();
    }
    if (auto v = j.find("gp"); v != j.end()) {
        c.gp = nested("/gp", [&] { return gp_config_from_json(*v); });
    }
    if (auto v = j.find("fitness"); v != j.end()) {
        c.fitness = nested("/fitness", [&] { return fitness_params_from_json(*v); });
    }
    if (auto v = j.find("jobs"); v != j.end()) {
        if (!is_non_negative_integer(*v) || v->get<std::uint64_t>() == 0) {
            throw format_error("<document>", 0, "/jobs", "expected a positive integer");
        }
        c.jobs = v->get<std::size_t>();
    }
    return c;
}

nlohmann::json to_json(const demo_options& o) {
    nlohmann::json j{{"goal_mode", to_string(o.goal)},
                     {"use_baseline", o.use_baseline},
                     {"insert_first_child", o.first_child_hint},
                     {"fresh_start", o.fresh_start}};
    j["subgoal_bonus"] = o.subgoal_bonus ? nlohmann::json(*o.subgoal_bonus) : nlohmann::json(nullptr);
    return j;
}

demo_options demo_options_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw format_error("<document>", 0, "/", "expected an object");
    }
    demo_options o;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string field = "/" + it.key();
        const auto& v = it.value();
        auto flag = [&]() {
            if (!v.is_boolean()) {
                throw format_error("<document>", 0, field, "expected true or false");
            }
            return v.get<bool>();
        };
        if (it.key() == "goal_mode") {
            try {
                o.goal = goal_mode_from_string(v.is_string() ? v.get<std::string>() : "");
            } catch (const std::invalid_argument& e) {
                throw format_error("<document>", 0, field, e.what());
            }
        } else if (it.key() == "use_baseline") {
            o.use_baseline = flag();
        } else if (it.key() == "insert_first_child") {
            o.first_child_hint = flag();
        } else if (it.key() == "fresh_start") {
            o.fresh_start = flag();
        } else if (it.key() == "subgoal_bonus") {
            if (v.is_null()) {
                o.subgoal_bonus.reset();
            } else if (v.is_number()) {
                o.subgoal_bonus = v.get<double>();
            } else {
                throw format_error("<document>", 0, field, "expected a number or null");
            }
        } else {
            throw format_error("<document>", 0, field, "unknown field");
        }
    }
    return o;
}

nlohmann::json to_json(const session_event& e) {
    return {{"seq", e.seq},
            {"type", e.type},
            {"generation", e.generation},
            {"best_fitness", e.best_fitness},
            {"mean_fitness", e.mean_fitness},
            {"phase", to_string(e.phase)},
            {"message", e.message}};
}

session_event session_event_from_json(const nlohmann::json& j) {
    session_event e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.type = j.at("type").get<std::string>();
    e.generation = j.at("generation").get<std::size_t>();
    e.best_fitness = j.at("best_fitness").get<double>();
    e.mean_fitness = j.at("mean_fitness").get<double>();
    e.phase = session_phase_from_string(j.at("phase").get<std::string>());
    e.message = j.value("message", "");
    return e;
}

nlohmann::json to_json(const episode_trace& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.steps) {
        nlohmann::json statuses = nlohmann::json::array();
        for (const auto& [id, st] : s.statuses) {
            statuses.push_back({{"id", id}, {"status", to_string(st)}});
        }
        steps.push_back({{"tick", s.tick}, {"statuses", std::move(statuses)}, {"world", to_json(s.world)}});
    }
    return {{"steps", std::move(steps)},
            {"status", to_string(t.run.final_status)},
            {"ticks", t.run.ticks},
            {"timed_out", t.run.timed_out},
            {"terms", to_json(t.terms)},
            {"fitness", t.fitness},
            {"solved", t.solved},
            {"goal_distance_mm", t.goal_distance_mm}};
}

episode_trace trace_episode(const evaluation_context& ctx, const behavior_tree& tree) {
    episode_trace trace;
    trace_step current;
    const episode_outcome o = run_episode(ctx, tree, [&](std::size_t id, status s, const world_state& world) {
        current.statuses.emplace_back(id, s);
        if (id == 0) { // the root reports last in every tick
            current.tick = trace.steps.size();
            current.world = world;
            trace.steps.push_back(std::move(current));
            current = trace_step{};
        }
    });
    trace.run = o.run;
    trace.terms = o.terms;
    trace.fitness = o.fitness;
    trace.solved = o.solved;
    trace.goal_distance_mm = o.terms.distance_mm;
    return trace;
}

// ---- session ------------------------------------------------------------

session::session(std::string id, session_config config, fs::path store)
    : id_(std::move(id)), config_(std::move(config)), store_(std::move(store)) {
    config_.gp.check();
    check_scenario(config_.scenario);
    ctx_ = evaluation_context::make(config_.scenario, config_.scenario_seed, config_.fitness, config_.gp.tick_budget);
    state_.seed = config_.gp.seed;
    if (!store_.empty()) {
        if (fs::exists(store_ / "session.json")) {
            throw std::runtime_error("session store already in use: " + store_.string());
        }
        fs::create_directories(store_ / "demos");
        write_text_file(store_ / "history.jsonl", "");
        write_text_file(store_ / "events.jsonl", "");
    }
    std::lock_guard lock(mutex_);
    emit_locked("created");
    persist_meta_locked();
}

std::unique_ptr<session> session::open(const fs::path& store) {
    const nlohmann::json meta = read_json_file(store / "session.json");
    std::unique_ptr<session> s(new session());
    s->store_ = store;
    s->id_ = meta.at("id").get<std::string>();
    s->config_ = nested("/config", [&] { return session_config_from_json(meta.at("config")); });
    fitness_params fitness = nested("/fitness", [&] { return fitness_params_from_json(meta.at("fitness")); });
    s->ctx_ = evaluation_context::make(s->config_.scenario, s->config_.scenario_seed, fitness, s->config_.gp.tick_budget);
    s->ctx_.fitness = fitness; // exactly the stored subgoals, even when empty
    s->ctx_.goal = nested("/goal", [&] { return goal_from_json(meta.at("goal")); });
    s->target_ = meta.at("target_generation").get<std::size_t>();
    s->state_.seed = s->config_.gp.seed;
    if (fs::exists(store / "checkpoint.json")) {
        s->state_ = load_document(store / "checkpoint.json", [](const nlohmann::json& d) { return checkpoint_from_json(d); });
    }
    const std::size_t demo_count = meta.at("demos").get<std::size_t>();
    for (std::size_t i = 0; i < demo_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "%03zu.json", i);
        s->demos_.push_back(load_document(store / "demos" / name,
                                          [](const nlohmann::json& d) { return demonstration_from_json(d); }));
    }
    // The checkpoint is authoritative for the run log.
    std::string log;
    for (const auto& r : s->state_.history) {
        log += run_log_line(r) + "\n";
    }
    write_text_file(store / "history.jsonl", log);
    for (const auto& e : read_log(store / "events.jsonl")) {
        s->events_.push_back(session_event_from_json(e));
    }
    std::string rewritten;
    for (const auto& e : s->events_) {
        rewritten += to_json(e).dump() + "\n";
    }
    write_text_file(store / "events.jsonl", rewritten);

    std::lock_guard lock(s->mutex_);
    const session_phase stored = session_phase_from_string(meta.at("phase").get<std::string>());
    s->phase_ = stored == session_phase::idle ? session_phase::idle : session_phase::paused;
    if (stored == session_phase::idle && s->state_.generation < s->target_) {
        s->phase_ = session_phase::paused;
    }
    s->publish_locked();
    if (stored != s->phase_) {
        s->emit_locked("recovered", "was " + std::string(to_string(stored)));
    }
    s->persist_meta_locked();
    return s;
}

session::~session() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    if (worker_.joinable()) {
        worker_.join();
    }
}

session_phase session::phase() const {
    std::lock_guard lock(mutex_);
    return phase_;
}

std::vector<std::string> session::allowed_actions() const {
    std::lock_guard lock(mutex_);
    return actions_for(phase_);
}

void session::start_gp(std::size_t generations) {
    if (generations == 0) {
        throw std::invalid_argument("generations must be positive");
    }
    {
        std::lock_guard lock(mutex_);
        if (phase_ != session_phase::idle && phase_ != session_phase::paused) {
            throw invalid_phase_transition(phase_, "start the GP");
        }
        phase_ = session_phase::evolving;
        pause_requested_ = false;
    }
    if (worker_.joinable()) {
        worker_.join();
    }
    // Only this thread touches state_ until the worker starts.
    if (!initialized()) {
        try {
            state_ = initialize(config_.gp, ctx_, config_.jobs);
        } catch (...) {
            std::lock_guard lock(mutex_);
            phase_ = session_phase::idle;
            throw;
        }
        persist_state();
    }
    {
        std::lock_guard lock(mutex_);
        target_ = state_.generation + generations;
        publish_locked();
        emit_locked("started");
        persist_meta_locked();
    }
    launch_worker();
}

void session::pause_gp() {
    std::lock_guard lock(mutex_);
    if (phase_ != session_phase::evolving) {
        throw invalid_phase_transition(phase_, "pause the GP");
    }
    pause_requested_ = true;
}

void session::resume_gp() {
    {
        std::lock_guard lock(mutex_);
        if (phase_ != session_phase::paused) {
            throw invalid_phase_transition(phase_, "resume the GP");
        }
        phase_ = session_phase::evolving;
        pause_requested_ = false;
        emit_locked("resumed");
        persist_meta_locked();
    }
    if (worker_.joinable()) {
        worker_.join();
    }
    launch_worker();
}

void session::wait_settled() const {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return phase_ != session_phase::evolving; });
}

void session::launch_worker() { worker_ = std::thread([this] { worker_main(); }); }

void session::worker_main() {
    for (;;) {
        {
            std::lock_guard lock(mutex_);
            if (stopping_ || pause_requested_) {
                phase_ = session_phase::paused;
                pause_requested_ = false;
                emit_locked("paused");
                persist_meta_locked();
                changed_.notify_all();
                return;
            }
            if (state_.generation >= target_) {
                phase_ = session_phase::idle;
                emit_locked("completed");
                persist_meta_locked();
                changed_.notify_all();
                return;
            }
        }
        try {
            step_generation(state_, config_.gp, ctx_, config_.jobs);
            persist_state();
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex_);
            phase_ = session_phase::paused;
            last_error_ = e.what();
            emit_locked("error", e.what());
            persist_meta_locked();
            changed_.notify_all();
            return;
        }
        std::lock_guard lock(mutex_);
        publish_locked();
        emit_locked("generation");
    }
}

demo_result session::add_demonstrations(const std::vector<demonstration>& demos, const demo_options& options) {
    if (demos.empty()) {
        throw std::invalid_argument("no demonstrations given");
    }
    session_phase previous;
    {
        std::lock_guard lock(mutex_);
        if (phase_ != session_phase::idle && phase_ != session_phase::paused) {
            throw invalid_phase_transition(phase_, "add demonstrations");
        }
        previous = phase_;
        phase_ = session_phase::demonstrating;
    }
    if (worker_.joinable()) {
        worker_.join();
    }
    auto restore = [&] {
        std::lock_guard lock(mutex_);
        phase_ = previous;
        changed_.notify_all();
    };

    demo_result result;
    evaluation_context ctx = ctx_;
    evolution_state state = state_;
    try {
        std::vector<demonstration> all = demos_;
        all.insert(all.end(), demos.begin(), demos.end());
        result.constraints = infer_goals(all, ctx.scenario.tolerance);
        if (options.use_baseline) {
            result.baseline = backchain(result.constraints);
        }

        goal_spec goal = ctx.goal;
        if (options.goal == goal_mode::replace) {
            goal.targets = result.constraints.goals;
        } else if (options.goal == goal_mode::extend) {
            for (const auto& t : result.constraints.goals) {
                const bool present = std::any_of(goal.targets.begin(), goal.targets.end(),
                                                 [&](const goal_target& g) { return g.object == t.object; });
                if (!present) {
                    goal.targets.push_back(t);
                }
            }
        }
        fitness_params fitness = ctx.fitness;
        if (options.subgoal_bonus) {
            fitness.subgoals.push_back(subgoal_spec{goal_spec{result.constraints.goals}, *options.subgoal_bonus});
        }
        result.goal_changed = !(goal == ctx.goal) || !(fitness == ctx.fitness);
        ctx.goal = goal;
        ctx.fitness = fitness;
        result.goal = goal;

        if (state.population.empty()) {
            state = initialize(config_.gp, ctx, config_.jobs);
        } else if (result.goal_changed) {
            reevaluate(state, ctx, config_.jobs);
        }
        if (options.fresh_start) {
            fresh_start(state, config_.gp, ctx, config_.jobs);
        }
        if (options.first_child_hint) {
            state.hint = insertion_hint::first_child_of_root;
        }
        if (result.baseline) {
            seed_baseline(state, *result.baseline, config_.gp, ctx, config_.jobs);
        }
    } catch (...) {
        restore();
        throw;
    }

    const std::size_t first_new = demos_.size();
    {
        std::lock_guard lock(mutex_);
        ctx_ = std::move(ctx);
        state_ = std::move(state);
        demos_.insert(demos_.end(), demos.begin(), demos.end());
    }
    if (!store_.empty()) {
        for (std::size_t i = first_new; i < demos_.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "%03zu.json", i);
            write_json_file_atomic(store_ / "demos" / name, to_json(demos_[i]));
        }
    }
    persist_state();
    {
        std::lock_guard lock(mutex_);
        phase_ = previous;
        publish_locked();
        emit_locked("demo", std::to_string(demos.size()) + " demonstration(s), " +
                                std::to_string(result.constraints.goals.size()) + " inferred goal(s)");
        persist_meta_locked();
        changed_.notify_all();
    }
    return result;
}

void session::publish_locked() {
    view_.history = state_.history;
    view_.generation = state_.generation;
    view_.episodes = state_.episodes;
    view_.best = initialized() ? std::optional<individual>(state_.best()) : std::nullopt;
}

void session::emit_locked(const std::string& type, const std::string& message) {
    session_event e;
    e.seq = events_.size();
    e.type = type;
    e.generation = view_.generation;
    if (!view_.history.empty()) {
        e.best_fitness = view_.history.back().best_fitness;
        e.mean_fitness = view_.history.back().mean_fitness;
    }
    if (view_.best) {
        e.best_fitness = view_.best->fitness; // reflects goal changes between generations
    }
    e.phase = phase_;
    e.message = message;
    events_.push_back(e);
    if (!store_.empty()) {
        append_line(store_ / "events.jsonl", to_json(e).dump());
    }
    changed_.notify_all();
}

void session::persist_meta_locked() const {
    if (store_.empty()) {
        return;
    }
    nlohmann::json meta{{"format_version", session_format_version},
                        {"id", id_},
                        {"config", to_json(config_)},
                        {"phase", to_string(phase_)},
                        {"target_generation", target_},
                        {"goal", to_json(ctx_.goal)},
                        {"fitness", to_json(ctx_.fitness)},
                        {"demos", demos_.size()}};
    write_json_file_atomic(store_ / "session.json", meta);
}

void session::persist_state() const {
    if (store_.empty() || !initialized()) {
        return;
    }
    write_json_file_atomic(store_ / "checkpoint.json", checkpoint_to_json(state_));
    std::string log;
    for (const auto& r : state_.history) {
        log += run_log_line(r) + "\n";
    }
    // Rewritten whole so it always mirrors the checkpoint, including after a
    // fresh start or a reload.
    write_text_file(store_ / "history.jsonl", log);
}

std::optional<individual> session::best() const {
    std::lock_guard lock(mutex_);
    return view_.best;
}

std::vector<generation_record> session::history() const {
    std::lock_guard lock(mutex_);
    return view_.history;
}

std::size_t session::generation() const {
    std::lock_guard lock(mutex_);
    return view_.generation;
}

std::size_t session::target_generation() const {
    std::lock_guard lock(mutex_);
    return target_;
}

std::uint64_t session::episodes() const {
    std::lock_guard lock(mutex_);
    return view_.episodes;
}

goal_spec session::goal() const {
    std::lock_guard lock(mutex_);
    return ctx_.goal;
}

fitness_params session::fitness() const {
    std::lock_guard lock(mutex_);
    return ctx_.fitness;
}

std::size_t session::demo_count() const {
    std::lock_guard lock(mutex_);
    return demos_.size();
}

std::string session::last_error() const {
    std::lock_guard lock(mutex_);
    return last_error_;
}

std::string session::pool_id() const {
    std::lock_guard lock(mutex_);
    return ctx_.pool.id();
}

episode_trace session::run_tree(const std::optional<behavior_tree>& tree) const {
    evaluation_context ctx;
    behavior_tree t;
    {
        std::lock_guard lock(mutex_);
        ctx = ctx_;
        if (tree) {
            t = *tree;
        } else if (view_.best) {
            t = view_.best->tree;
        } else {
            throw std::invalid_argument("session has no best tree yet");
        }
    }
    if (const auto v = validate(t); !v.empty()) {
        throw std::invalid_argument("invalid tree: " + std::string(to_string(v.front().kind)));
    }
    return trace_episode(ctx, t);
}

std::vector<session_event> session::events(std::uint64_t from_seq) const {
    std::lock_guard lock(mutex_);
    if (from_seq >= events_.size()) {
        return {};
    }
    return {events_.begin() + static_cast<std::ptrdiff_t>(from_seq), events_.end()};
}

bool session::wait_for_event(std::uint64_t from_seq, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return changed_.wait_for(lock, timeout, [&] { return events_.size() > from_seq; });
}

nlohmann::json session::summary() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j{{"id", id_},
                     {"phase", to_string(phase_)},
                     {"allowed_actions", actions_for(phase_)},
                     {"generation", view_.generation},
                     {"target_generation", target_},
                     {"episodes", view_.episodes},
                     {"scenario", config_.scenario.name},
                     {"scenario_seed", config_.scenario_seed},
                     {"seed", config_.gp.seed},
                     {"pool_id", ctx_.pool.id()},
                     {"goal", to_json(ctx_.goal)},
                     {"subgoals", nlohmann::json::array()},
                     {"demos", demos_.size()},
                     {"world", to_json(ctx_.initial)},
                     {"last_error", last_error_}};
    for (const auto& s : ctx_.fitness.subgoals) {
        j["subgoals"].push_back(to_json(s));
    }
    if (view_.best) {
        j["best"] = {{"genome", view_.best->genome},
                     {"fitness", view_.best->fitness},
                     {"solved", view_.best->solved},
                     {"terms", to_json(view_.best->terms)}};
    } else {
        j["best"] = nullptr;
    }
    return j;
}

evolution_state session::state() const {
    std::lock_guard lock(mutex_);
    if (phase_ == session_phase::evolving || phase_ == session_phase::demonstrating) {
        throw invalid_phase_transition(phase_, "read the evolution state");
    }
    return state_;
}

// ---- manager ------------------------------------------------------------

session_manager::session_manager(fs::path root, fs::path scenarios_dir)
    : root_(std::move(root)), scenarios_dir_(std::move(scenarios_dir)) {
    if (root_.empty()) {
        return;
    }
    fs::create_directories(root_);
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && fs::exists(entry.path() / "session.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        std::shared_ptr<session> s = session::open(d);
        const std::string id = s->id();
        if (id.rfind("s-", 0) == 0) {
            try {
                next_ = std::max<std::uint64_t>(next_, std::stoull(id.substr(2)) + 1);
            } catch (const std::exception&) {
            }
        }
        sessions_.emplace(id, std::move(s));
    }
}

std::string session_manager::create(const nlohmann::json& request) {
    return create(session_config_from_json(request, scenarios_dir_));
}

std::string session_manager::create(session_config config) {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "s-%04llu", static_cast<unsigned long long>(next_++));
    const std::string id = buf;
    sessions_.emplace(id, std::make_shared<session>(id, std::move(config), root_.empty() ? fs::path{} : root_ / id));
    return id;
}

std::shared_ptr<session> session_manager::get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw unknown_session(id);
    }
    return it->second;
}

std::vector<std::string> session_manager::list() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) {
        ids.push_back(id);
    }
    return ids;
}

} // namespace kitbt
