#include "kitbt/serialization.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace kitbt {

namespace {

std::string describe(const std::string& source, std::size_t line, const std::string& field, const std::string& message) {
    std::string out = source;
    if (line > 0) {
        out += ":" + std::to_string(line);
    }
    if (!field.empty()) {
        out += ": " + field;
    }
    return out + ": " + message;
}

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw format_error("<document>", 0, field, message);
}

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

// Strict view of a JSON object: every key must be consumed before finish().
class object_reader {
public:
    object_reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) {
            fail(path_.empty() ? "/" : path_, "expected an object");
        }
    }

    const json* optional(std::string_view key) {
        auto it = j_.find(std::string(key));
        if (it == j_.end()) {
            return nullptr;
        }
        used_.insert(std::string(key));
        return &*it;
    }

    const json& required(std::string_view key) {
        const json* v = optional(key);
        if (v == nullptr) {
            fail(child(path_, key), "missing required field");
        }
        return *v;
    }

    std::string path(std::string_view key) const { return child(path_, key); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) {
                fail(child(path_, it.key()), "unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

double as_double(const json& j, const std::string& field) {
    if (!j.is_number()) {
        fail(field, "expected a number");
    }
    return j.get<double>();
}

std::uint64_t as_uint(const json& j, const std::string& field) {
    if (j.is_number_unsigned()) {
        return j.get<std::uint64_t>();
    }
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    fail(field, "expected a non-negative integer");
}

int as_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) {
        fail(field, "expected an integer");
    }
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& field) {
    if (!j.is_string()) {
        fail(field, "expected a string");
    }
    return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) {
        fail(field, "expected true or false");
    }
    return j.get<bool>();
}

const json& as_array(const json& j, const std::string& field) {
    if (!j.is_array()) {
        fail(field, "expected an array");
    }
    return j;
}

std::array<double, 2> as_pair(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) {
        fail(field, "expected [a, b]");
    }
    return {as_double(j[0], child(field, 0)), as_double(j[1], child(field, 1))};
}

template <class T, class Read>
void read_into(object_reader& r, std::string_view key, T& out, Read read) {
    if (const json* v = r.optional(key)) {
        out = read(*v, r.path(key));
    }
}

std::size_t as_size(const json& j, const std::string& field) { return static_cast<std::size_t>(as_uint(j, field)); }

// Converts enum parsers' std::invalid_argument into a located error.
template <class F>
auto parse_enum(const json& j, const std::string& field, F from_string) {
    const std::string text = as_string(j, field);
    try {
        return from_string(text);
    } catch (const std::invalid_argument& e) {
        fail(field, e.what());
    }
}

std::string_view kind_name(object_kind k) {
    switch (k) {
        case object_kind::movable_box:
            return "movable_box";
        case object_kind::kitting_box:
            return "kitting_box";
        case object_kind::table:
            return "table";
    }
    return "?";
}

object_kind kind_from_name(std::string_view s) {
    if (s == "movable_box") return object_kind::movable_box;
    if (s == "kitting_box") return object_kind::kitting_box;
    if (s == "table") return object_kind::table;
    throw std::invalid_argument("unknown object kind: " + std::string(s));
}

std::string_view node_type_name(node_type t) {
    switch (t) {
        case node_type::sequence:
            return "sequence";
        case node_type::fallback:
            return "fallback";
        case node_type::action:
            return "action";
        case node_type::condition:
            return "condition";
    }
    return "?";
}

std::string_view hint_name(insertion_hint h) { return h == insertion_hint::none ? "none" : "first_child_of_root"; }

insertion_hint hint_from_name(std::string_view s) {
    if (s == "none") return insertion_hint::none;
    if (s == "first_child_of_root") return insertion_hint::first_child_of_root;
    throw std::invalid_argument("unknown insertion hint: " + std::string(s));
}

std::string_view crossover_name(crossover_mode m) { return m == crossover_mode::swap ? "swap" : "insert"; }

crossover_mode crossover_from_name(std::string_view s) {
    if (s == "swap") return crossover_mode::swap;
    if (s == "insert") return crossover_mode::insert;
    throw std::invalid_argument("unknown crossover mode: " + std::string(s));
}

behavior_tree tree_from_genome_text(const json& j, const std::string& field) {
    const std::string text = as_string(j, field);
    try {
        return parse_tree(text);
    } catch (const genome_error& e) {
        fail(field, e.what());
    }
}

goal_target target_from_json(const json& j, const std::string& field, double default_tol) {
    object_reader r(j, field);
    goal_target t;
    t.object = as_string(r.required("object"), r.path("object"));
    t.frame = as_string(r.required("frame"), r.path("frame"));
    t.position = vec3_from_json(r.required("position"), r.path("position"));
    t.tolerance = default_tol;
    read_into(r, "tolerance", t.tolerance, as_double);
    r.finish();
    return t;
}

goal_spec goal_with_tolerance(const json& j, const std::string& field, double default_tol) {
    goal_spec g;
    const json& a = as_array(j, field);
    for (std::size_t i = 0; i < a.size(); ++i) {
        g.targets.push_back(target_from_json(a[i], child(field, i), default_tol));
    }
    return g;
}

subgoal_spec subgoal_with_tolerance(const json& j, const std::string& field, double default_tol) {
    object_reader r(j, field);
    subgoal_spec s;
    s.goal = goal_with_tolerance(r.required("goal"), r.path("goal"), default_tol);
    read_into(r, "bonus", s.bonus, as_double);
    r.finish();
    return s;
}

json subgoals_json(const std::vector<subgoal_spec>& subgoals) {
    json a = json::array();
    for (const auto& s : subgoals) {
        a.push_back(to_json(s));
    }
    return a;
}

std::vector<subgoal_spec> subgoals_from(const json& j, const std::string& field, double default_tol) {
    std::vector<subgoal_spec> out;
    const json& a = as_array(j, field);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(subgoal_with_tolerance(a[i], child(field, i), default_tol));
    }
    return out;
}

json terms_json(const fitness_terms& t) { return to_json(t); }

fitness_terms terms_from_json(const json& j, const std::string& field) {
    object_reader r(j, field);
    fitness_terms t;
    t.distance_mm = as_double(r.required("distance_mm"), r.path("distance_mm"));
    t.length = as_size(r.required("length"), r.path("length"));
    t.timed_out = as_bool(r.required("timed_out"), r.path("timed_out"));
    t.failed = as_bool(r.required("failed"), r.path("failed"));
    t.bonus = as_double(r.required("bonus"), r.path("bonus"));
    r.finish();
    return t;
}

generation_record record_from(const json& j, const std::string& field) {
    object_reader r(j, field);
    generation_record g;
    g.generation = as_size(r.required("gen"), r.path("gen"));
    g.best_fitness = as_double(r.required("best_fitness"), r.path("best_fitness"));
    g.mean_fitness = as_double(r.required("mean_fitness"), r.path("mean_fitness"));
    g.best_genome = as_string(r.required("best_genome"), r.path("best_genome"));
    g.episodes_so_far = as_uint(r.required("episodes_so_far"), r.path("episodes_so_far"));
    read_into(r, "best_solved", g.best_solved, as_bool);
    r.finish();
    return g;
}

world_state world_from(const json& j, const std::string& field) {
    object_reader r(j, field);
    world_state s;
    const std::string objects_path = r.path("objects");
    const json& objects = as_array(r.required("objects"), objects_path);
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string p = child(objects_path, i);
        object_reader o(objects[i], p);
        scene_object obj;
        obj.name = as_string(o.required("name"), o.path("name"));
        obj.kind = parse_enum(o.required("kind"), o.path("kind"), kind_from_name);
        obj.size = as_double(o.required("size"), o.path("size"));
        obj.position = vec3_from_json(o.required("position"), o.path("position"));
        read_into(o, "supported_by", obj.supported_by, as_string);
        o.finish();
        s.objects.push_back(std::move(obj));
    }
    {
        object_reader g(r.required("gripper"), r.path("gripper"));
        read_into(g, "holding", s.gripper.holding, as_string);
        s.gripper.position = vec3_from_json(g.required("position"), g.path("position"));
        g.finish();
    }
    read_into(r, "tick", s.tick, as_uint);
    read_into(r, "steps", s.steps, as_uint);
    read_into(r, "seed", s.seed, as_uint);
    r.finish();
    return s;
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Best-effort: follows the named segments of `field` through the text.
std::size_t locate_field(std::string_view text, const std::string& field) {
    std::size_t pos = 0;
    bool found = false;
    std::stringstream ss(field);
    std::string segment;
    while (std::getline(ss, segment, '/')) {
        if (segment.empty() || std::all_of(segment.begin(), segment.end(), [](unsigned char c) { return std::isdigit(c); })) {
            continue;
        }
        const std::size_t at = text.find("\"" + segment + "\"", pos);
        if (at == std::string_view::npos) {
            break;
        }
        pos = at;
        found = true;
    }
    return found ? line_of_offset(text, pos) : 0;
}

} // namespace

format_error::format_error(std::string source_, std::size_t line_, std::string field_, const std::string& message_)
    : std::runtime_error(describe(source_, line_, field_, message_)),
      source(std::move(source_)),
      line(line_),
      field(std::move(field_)),
      message(message_) {}

void rethrow_with_line(const format_error& e, std::string_view text, const std::string& source) {
    const std::size_t line = e.line > 0 ? e.line : locate_field(text, e.field);
    throw format_error(source, line, e.field, e.message);
}

json parse_json(std::string_view text, const std::string& source) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t line = e.byte > 0 ? line_of_offset(text, e.byte - 1) : 1;
        std::string message = e.what();
        // Drop the library's "[json.exception.parse_error.101] " prefix.
        if (auto close = message.find("] "); close != std::string::npos) {
            message = message.substr(close + 2);
        }
        throw format_error(source, line, "", message);
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw format_error(path.string(), 0, "", "cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json_file(const std::filesystem::path& path) { return parse_json(read_text_file(path), path.string()); }

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("short write to " + path.string());
    }
}

void write_json_file_atomic(const std::filesystem::path& path, const json& doc) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write_text_file(tmp, doc.dump(1) + "\n");
    std::filesystem::rename(tmp, path);
}

// ---- geometry and goals -------------------------------------------------

json to_json(const vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

vec3 vec3_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) {
        fail(field, "expected [x, y, z]");
    }
    return vec3(as_double(j[0], child(field, 0)), as_double(j[1], child(field, 1)), as_double(j[2], child(field, 2)));
}

json to_json(const goal_target& t) {
    return {{"object", t.object}, {"frame", t.frame}, {"position", to_json(t.position)}, {"tolerance", t.tolerance}};
}

json to_json(const goal_spec& g) {
    json a = json::array();
    for (const auto& t : g.targets) {
        a.push_back(to_json(t));
    }
    return a;
}

goal_spec goal_from_json(const json& j, const std::string& field) {
    return goal_with_tolerance(j, field, default_tolerance);
}

json to_json(const subgoal_spec& s) { return {{"goal", to_json(s.goal)}, {"bonus", s.bonus}}; }

subgoal_spec subgoal_from_json(const json& j, const std::string& field) {
    return subgoal_with_tolerance(j, field, default_tolerance);
}

// ---- scenario -----------------------------------------------------------

json to_json(const scenario_config& s) {
    json j;
    j["name"] = s.name;
    j["description"] = s.description;
    j["box_size"] = s.box_size;
    j["tolerance"] = s.tolerance;
    j["lattice_pitch"] = s.lattice_pitch;
    if (s.kit) {
        j["kit"] = {{"name", s.kit->name},
                    {"center", {s.kit->center[0], s.kit->center[1]}},
                    {"grid", s.kit->grid},
                    {"cell_pitch", s.kit->cell_pitch}};
    } else {
        j["kit"] = nullptr;
    }
    json boxes = json::array();
    for (const auto& b : s.boxes) {
        json box{{"name", b.name}, {"size", b.size}};
        if (b.placement.table_position) {
            box["position"] = {(*b.placement.table_position)[0], (*b.placement.table_position)[1]};
        }
        if (b.placement.on) {
            box["on"] = *b.placement.on;
        }
        if (b.placement.region) {
            const auto& r = *b.placement.region;
            box["region"] = {{"x", {r.x_min, r.x_max}}, {"y", {r.y_min, r.y_max}}};
        }
        boxes.push_back(std::move(box));
    }
    j["boxes"] = std::move(boxes);
    j["goal"] = to_json(s.goal);
    j["subgoals"] = subgoals_json(s.subgoals);
    return j;
}

scenario_config scenario_from_json(const json& j) {
    object_reader r(j, "");
    scenario_config s;
    s.name = as_string(r.required("name"), r.path("name"));
    read_into(r, "description", s.description, as_string);
    read_into(r, "box_size", s.box_size, as_double);
    read_into(r, "tolerance", s.tolerance, as_double);
    read_into(r, "lattice_pitch", s.lattice_pitch, as_double);
    if (const json* k = r.optional("kit"); k != nullptr && !k->is_null()) {
        const std::string p = r.path("kit");
        object_reader kr(*k, p);
        kit_spec kit;
        read_into(kr, "name", kit.name, as_string);
        read_into(kr, "center", kit.center, as_pair);
        read_into(kr, "grid", kit.grid, as_int);
        read_into(kr, "cell_pitch", kit.cell_pitch, as_double);
        kr.finish();
        s.kit = kit;
    }
    const std::string boxes_path = r.path("boxes");
    const json& boxes = as_array(r.required("boxes"), boxes_path);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const std::string p = child(boxes_path, i);
        object_reader br(boxes[i], p);
        box_spec b;
        b.name = as_string(br.required("name"), br.path("name"));
        b.size = s.box_size;
        read_into(br, "size", b.size, as_double);
        int placements = 0;
        if (const json* v = br.optional("position")) {
            b.placement.table_position = as_pair(*v, br.path("position"));
            ++placements;
        }
        if (const json* v = br.optional("on")) {
            b.placement.on = as_string(*v, br.path("on"));
            ++placements;
        }
        if (const json* v = br.optional("region")) {
            const std::string rp = br.path("region");
            object_reader rr(*v, rp);
            const auto x = as_pair(rr.required("x"), rr.path("x"));
            const auto y = as_pair(rr.required("y"), rr.path("y"));
            rr.finish();
            b.placement.region = sampling_region{x[0], x[1], y[0], y[1]};
            ++placements;
        }
        if (placements != 1) {
            fail(p, "exactly one of position, on, region is required");
        }
        br.finish();
        s.boxes.push_back(std::move(b));
    }
    s.goal = goal_with_tolerance(r.required("goal"), r.path("goal"), s.tolerance);
    if (const json* v = r.optional("subgoals")) {
        s.subgoals = subgoals_from(*v, r.path("subgoals"), s.tolerance);
    }
    r.finish();
    try {
        check_scenario(s);
    } catch (const world_error& e) {
        fail("", e.what());
    }
    return s;
}

// ---- GP configuration ---------------------------------------------------

json to_json(const gp_config& c) {
    return {{"population_size", c.population_size},
            {"mutation_parents", c.mutation_parents},
            {"mutation_offspring_per_parent", c.mutation_offspring_per_parent},
            {"max_mutations_per_individual", c.max_mutations_per_individual},
            {"mutation_probabilities", {{"add", c.mutation.add}, {"delete", c.mutation.remove}, {"change", c.mutation.change}}},
            {"crossover_parents", c.crossover_parents},
            {"crossover_offspring_per_parent", c.crossover_offspring_per_parent},
            {"elites", c.elites},
            {"tick_budget", c.tick_budget},
            {"seed", c.seed},
            {"control_node_probability", c.control_node_probability},
            {"baseline_donor_probability", c.baseline_donor_probability},
            {"baseline_copies", c.baseline_copies},
            {"max_repair_attempts", c.max_repair_attempts},
            {"allow_identical", c.allow_identical},
            {"crossover", crossover_name(c.crossover)},
            {"initial_genes_min", c.initial_genes_min},
            {"initial_genes_max", c.initial_genes_max}};
}

gp_config gp_config_from_json(const json& j, gp_config c) {
    object_reader r(j, "");
    read_into(r, "population_size", c.population_size, as_size);
    read_into(r, "mutation_parents", c.mutation_parents, as_size);
    read_into(r, "mutation_offspring_per_parent", c.mutation_offspring_per_parent, as_size);
    read_into(r, "max_mutations_per_individual", c.max_mutations_per_individual, as_size);
    if (const json* v = r.optional("mutation_probabilities")) {
        object_reader m(*v, r.path("mutation_probabilities"));
        read_into(m, "add", c.mutation.add, as_double);
        read_into(m, "delete", c.mutation.remove, as_double);
        read_into(m, "change", c.mutation.change, as_double);
        m.finish();
    }
    read_into(r, "crossover_parents", c.crossover_parents, as_size);
    read_into(r, "crossover_offspring_per_parent", c.crossover_offspring_per_parent, as_size);
    read_into(r, "elites", c.elites, as_size);
    read_into(r, "tick_budget", c.tick_budget, as_size);
    read_into(r, "seed", c.seed, as_uint);
    read_into(r, "control_node_probability", c.control_node_probability, as_double);
    read_into(r, "baseline_donor_probability", c.baseline_donor_probability, as_double);
    read_into(r, "baseline_copies", c.baseline_copies, as_size);
    read_into(r, "max_repair_attempts", c.max_repair_attempts, as_size);
    read_into(r, "allow_identical", c.allow_identical, as_bool);
    if (const json* v = r.optional("crossover")) {
        c.crossover = parse_enum(*v, r.path("crossover"), crossover_from_name);
    }
    read_into(r, "initial_genes_min", c.initial_genes_min, as_size);
    read_into(r, "initial_genes_max", c.initial_genes_max, as_size);
    r.finish();
    try {
        c.check();
    } catch (const std::invalid_argument& e) {
        fail("", e.what());
    }
    return c;
}

json to_json(const fitness_params& p) {
    return {{"length_penalty", p.length_penalty},
            {"timeout_penalty", p.timeout_penalty},
            {"failure_penalty", p.failure_penalty},
            {"subgoals", subgoals_json(p.subgoals)},
            {"length_metric", to_string(p.length)}};
}

fitness_params fitness_params_from_json(const json& j, fitness_params p) {
    object_reader r(j, "");
    read_into(r, "length_penalty", p.length_penalty, as_double);
    read_into(r, "timeout_penalty", p.timeout_penalty, as_double);
    read_into(r, "failure_penalty", p.failure_penalty, as_double);
    if (const json* v = r.optional("subgoals")) {
        p.subgoals = subgoals_from(*v, r.path("subgoals"), default_tolerance);
    }
    if (const json* v = r.optional("length_metric")) {
        p.length = parse_enum(*v, r.path("length_metric"), length_metric_from_string);
    }
    r.finish();
    try {
        p.check();
    } catch (const std::invalid_argument& e) {
        fail("", e.what());
    }
    return p;
}

// ---- world and demonstrations -------------------------------------------

json to_json(const world_state& s) {
    json objects = json::array();
    for (const auto& o : s.objects) {
        objects.push_back({{"name", o.name},
                           {"kind", kind_name(o.kind)},
                           {"size", o.size},
                           {"position", to_json(o.position)},
                           {"supported_by", o.supported_by}});
    }
    return {{"objects", std::move(objects)},
            {"gripper", {{"holding", s.gripper.holding}, {"position", to_json(s.gripper.position)}}},
            {"tick", s.tick},
            {"steps", s.steps},
            {"seed", s.seed}};
}

world_state world_from_json(const json& j) { return world_from(j, ""); }

json to_json(const demonstration& d) {
    json actions = json::array();
    for (const auto& a : d.actions) {
        json positions = json::object();
        for (const auto& [frame, p] : a.positions) {
            positions[frame] = to_json(p);
        }
        actions.push_back({{"type", to_string(a.type)}, {"object", a.object}, {"index", a.index}, {"positions", positions}});
    }
    return {{"format", "kitbt-demo"}, {"initial", to_json(d.initial)}, {"actions", actions}, {"final_state", to_json(d.final_state)}};
}

demonstration demonstration_from_json(const json& j) {
    object_reader r(j, "");
    if (as_string(r.required("format"), r.path("format")) != "kitbt-demo") {
        fail(r.path("format"), "expected \"kitbt-demo\"");
    }
    demonstration d;
    d.initial = world_from(r.required("initial"), r.path("initial"));
    const std::string ap = r.path("actions");
    const json& actions = as_array(r.required("actions"), ap);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const std::string p = child(ap, i);
        object_reader ar(actions[i], p);
        demo_action a;
        a.type = parse_enum(ar.required("type"), ar.path("type"), demo_action_type_from_string);
        a.object = as_string(ar.required("object"), ar.path("object"));
        a.index = i;
        read_into(ar, "index", a.index, as_size);
        if (const json* v = ar.optional("positions")) {
            const std::string pp = ar.path("positions");
            if (!v->is_object()) {
                fail(pp, "expected an object");
            }
            for (auto it = v->begin(); it != v->end(); ++it) {
                a.positions[it.key()] = vec3_from_json(it.value(), child(pp, it.key()));
            }
        }
        ar.finish();
        d.actions.push_back(std::move(a));
    }
    d.final_state = world_from(r.required("final_state"), r.path("final_state"));
    r.finish();
    return d;
}

demo_command demo_command_from_json(const json& j, const std::string& field) {
    object_reader r(j, field);
    demo_command c;
    const json* pick = r.optional("pick");
    const json* place = r.optional("place");
    if ((pick == nullptr) == (place == nullptr)) {
        fail(field, "expected exactly one of pick, place");
    }
    if (pick != nullptr) {
        c.type = demo_action_type::pick;
        c.object = as_string(*pick, r.path("pick"));
    } else {
        c.type = demo_action_type::place;
        object_reader pr(*place, r.path("place"));
        read_into(pr, "object", c.object, as_string);
        read_into(pr, "frame", c.frame, as_string);
        c.position = vec3_from_json(pr.required("position"), pr.path("position"));
        pr.finish();
    }
    r.finish();
    return c;
}

json to_json(const demo_command& c) {
    if (c.type == demo_action_type::pick) {
        return {{"pick", c.object}};
    }
    json place{{"frame", c.frame}, {"position", to_json(c.position)}};
    if (!c.object.empty()) {
        place["object"] = c.object;
    }
    return {{"place", place}};
}

demonstration demonstration_from_document(const json& j, const scenario_config& scenario) {
    if (j.is_object() && j.contains("format")) {
        return demonstration_from_json(j);
    }
    object_reader r(j, "");
    std::uint64_t seed = 0;
    read_into(r, "scenario_seed", seed, as_uint);
    auto commands = [&](std::string_view key) {
        std::vector<demo_command> out;
        if (const json* v = r.optional(key)) {
            const std::string p = r.path(key);
            const json& a = as_array(*v, p);
            for (std::size_t i = 0; i < a.size(); ++i) {
                out.push_back(demo_command_from_json(a[i], child(p, i)));
            }
        }
        return out;
    };
    const auto setup = commands("setup");
    const auto script = commands("commands");
    r.finish();
    world_state start = reset(scenario, seed);
    try {
        if (!setup.empty()) {
            start = record(start, setup).final_state;
        }
        return record(start, script);
    } catch (const invalid_action& e) {
        fail("/commands", e.what());
    } catch (const world_error& e) {
        fail("/commands", e.what());
    }
}

// ---- run logs and checkpoints -------------------------------------------

json to_json(const generation_record& r) {
    return {{"gen", r.generation},
            {"best_fitness", r.best_fitness},
            {"mean_fitness", r.mean_fitness},
            {"best_genome", r.best_genome},
            {"episodes_so_far", r.episodes_so_far},
            {"best_solved", r.best_solved}};
}

generation_record generation_record_from_json(const json& j) { return record_from(j, ""); }

std::string run_log_line(const generation_record& r) { return to_json(r).dump(); }

json to_json(const fitness_terms& t) {
    return {{"distance_mm", t.distance_mm},
            {"length", t.length},
            {"timed_out", t.timed_out},
            {"failed", t.failed},
            {"bonus", t.bonus}};
}

json checkpoint_to_json(const evolution_state& s) {
    json population = json::array();
    for (const auto& ind : s.population) {
        population.push_back({{"genome", ind.genome},
                              {"terms", terms_json(ind.terms)},
                              {"fitness", ind.fitness},
                              {"solved", ind.solved},
                              {"evaluated", ind.evaluated},
                              {"origin", to_string(ind.origin)}});
    }
    json history = json::array();
    for (const auto& h : s.history) {
        history.push_back(to_json(h));
    }
    json baselines = json::array();
    for (const auto& b : s.baselines) {
        baselines.push_back(genome_text(b));
    }
    json cache = json::array();
    for (const auto& [genome, c] : s.cache) {
        cache.push_back({{"genome", genome}, {"terms", terms_json(c.terms)}, {"fitness", c.fitness}, {"solved", c.solved}});
    }
    return {{"format_version", checkpoint_format_version},
            {"generation", s.generation},
            {"seed", s.seed},
            {"epoch", s.epoch},
            {"population", std::move(population)},
            {"history", std::move(history)},
            {"baselines", std::move(baselines)},
            {"hint", hint_name(s.hint)},
            {"cache", std::move(cache)},
            {"episodes", s.episodes},
            {"mutations", {{"add", s.mutations.add}, {"remove", s.mutations.remove}, {"change", s.mutations.change}}}};
}

evolution_state checkpoint_from_json(const json& j) {
    object_reader r(j, "");
    if (as_int(r.required("format_version"), r.path("format_version")) != checkpoint_format_version) {
        fail(r.path("format_version"), "unsupported checkpoint version");
    }
    evolution_state s;
    s.generation = as_size(r.required("generation"), r.path("generation"));
    s.seed = as_uint(r.required("seed"), r.path("seed"));
    s.epoch = as_uint(r.required("epoch"), r.path("epoch"));
    {
        const std::string p = r.path("population");
        const json& a = as_array(r.required("population"), p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string ip = child(p, i);
            object_reader ir(a[i], ip);
            individual ind;
            ind.tree = tree_from_genome_text(ir.required("genome"), ir.path("genome"));
            ind.genome = genome_text(ind.tree);
            ind.terms = terms_from_json(ir.required("terms"), ir.path("terms"));
            ind.fitness = as_double(ir.required("fitness"), ir.path("fitness"));
            ind.solved = as_bool(ir.required("solved"), ir.path("solved"));
            ind.evaluated = as_bool(ir.required("evaluated"), ir.path("evaluated"));
            ind.origin = parse_enum(ir.required("origin"), ir.path("origin"), provenance_from_string);
            ir.finish();
            s.population.push_back(std::move(ind));
        }
    }
    {
        const std::string p = r.path("history");
        const json& a = as_array(r.required("history"), p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.history.push_back(record_from(a[i], child(p, i)));
        }
    }
    {
        const std::string p = r.path("baselines");
        const json& a = as_array(r.required("baselines"), p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.baselines.push_back(tree_from_genome_text(a[i], child(p, i)));
        }
    }
    s.hint = parse_enum(r.required("hint"), r.path("hint"), hint_from_name);
    {
        const std::string p = r.path("cache");
        const json& a = as_array(r.required("cache"), p);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string ip = child(p, i);
            object_reader cr(a[i], ip);
            const std::string genome = as_string(cr.required("genome"), cr.path("genome"));
            cached_fitness c;
            c.terms = terms_from_json(cr.required("terms"), cr.path("terms"));
            c.fitness = as_double(cr.required("fitness"), cr.path("fitness"));
            c.solved = as_bool(cr.required("solved"), cr.path("solved"));
            cr.finish();
            s.cache.emplace(genome, c);
        }
    }
    s.episodes = as_uint(r.required("episodes"), r.path("episodes"));
    {
        object_reader m(r.required("mutations"), r.path("mutations"));
        s.mutations.add = as_uint(m.required("add"), m.path("add"));
        s.mutations.remove = as_uint(m.required("remove"), m.path("remove"));
        s.mutations.change = as_uint(m.required("change"), m.path("change"));
        m.finish();
    }
    r.finish();
    return s;
}

// ---- trees and pools ----------------------------------------------------

json tree_file(const behavior_tree& t, const std::string& pool_id) {
    return {{"format_version", tree_format_version}, {"genome", genome_text(t)}, {"pool_id", pool_id}};
}

behavior_tree tree_from_file(const json& j, const std::string& expected_pool_id) {
    object_reader r(j, "");
    if (as_int(r.required("format_version"), r.path("format_version")) != tree_format_version) {
        fail(r.path("format_version"), "unsupported tree format version");
    }
    behavior_tree t = tree_from_genome_text(r.required("genome"), r.path("genome"));
    const std::string pool_id = as_string(r.required("pool_id"), r.path("pool_id"));
    r.finish();
    if (!expected_pool_id.empty() && pool_id != expected_pool_id) {
        fail(r.path("pool_id"), "tree was saved for " + pool_id + ", expected " + expected_pool_id);
    }
    if (const auto v = validate(t); !v.empty()) {
        fail(r.path("genome"), "invalid tree: " + std::string(to_string(v.front().kind)) + " at node " + std::to_string(v.front().node_id));
    }
    return t;
}

namespace {

json structure_of(const node& n, std::size_t& next_id) {
    json j{{"id", next_id++}, {"type", node_type_name(n.type)}};
    if (n.is_control()) {
        json children = json::array();
        for (const auto& c : n.children) {
            children.push_back(structure_of(c, next_id));
        }
        j["children"] = std::move(children);
    } else {
        j["behavior"] = n.behavior;
        j["token"] = token_of(n);
    }
    return j;
}

} // namespace

json tree_structure(const behavior_tree& t) {
    std::size_t next_id = 0;
    return structure_of(t.root, next_id);
}

json to_json(const task_constraints& c) {
    json goals = json::array();
    for (const auto& g : c.goals) {
        goals.push_back(to_json(g));
    }
    json order = json::array();
    for (const auto& [a, b] : c.order) {
        order.push_back({a, b});
    }
    return {{"goals", goals}, {"order", order}};
}

json pool_manifest(const gene_pool& pool) {
    json behaviors = json::array();
    for (const auto& b : pool.behaviors()) {
        json e{{"behavior_id", b.behavior_id},
               {"token", token_of(b.as_node())},
               {"kind", b.kind == behavior_kind::action ? "action" : "condition"},
               {"preconditions", b.preconditions},
               {"postconditions", b.postconditions}};
        if (b.composite()) {
            e["object"] = b.object;
            e["frame"] = b.frame;
            e["position"] = to_json(b.position);
            e["position_label"] = b.position_label;
            e["expansion"] = to_text(b.expansion);
        }
        behaviors.push_back(std::move(e));
    }
    return {{"pool_id", pool.id()}, {"count", pool.count()}, {"behaviors", std::move(behaviors)}};
}

} // namespace kitbt
