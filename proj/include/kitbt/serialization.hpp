#pragma once

// JSON forms of every document the tools exchange: scenarios, configs, saved
// trees, demonstrations, world snapshots, run logs and checkpoints.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kitbt/gp.hpp"
#include "kitbt/lfd.hpp"
#include "kitbt/scenario.hpp"

namespace kitbt {

using json = nlohmann::json;

/// Malformed document. `line` is 1-based (0 when unknown); `field` is a
/// JSON-pointer-like path to the offending value.
class format_error : public std::runtime_error {
public:
    format_error(std::string source, std::size_t line, std::string field, const std::string& message);
    std::string source;
    std::size_t line;
    std::string field;
    std::string message;
};

inline constexpr int tree_format_version = 1;
inline constexpr int checkpoint_format_version = 1;

/// True for integers >= 0, whether stored signed or unsigned.
inline bool is_non_negative_integer(const json& j) {
    return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

json parse_json(std::string_view text, const std::string& source = "<input>");
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
/// Writes through a temporary file and a rename, so readers never see a torn file.
void write_json_file_atomic(const std::filesystem::path& path, const json& doc);

json to_json(const vec3& v);
vec3 vec3_from_json(const json& j, const std::string& field = "");

json to_json(const goal_target& t);
json to_json(const goal_spec& g);
goal_spec goal_from_json(const json& j, const std::string& field = "goal");
json to_json(const subgoal_spec& s);
subgoal_spec subgoal_from_json(const json& j, const std::string& field = "subgoal");

json to_json(const scenario_config& s);
scenario_config scenario_from_json(const json& j);

json to_json(const gp_config& c);
/// Fields absent from `j` keep their value from `base`.
gp_config gp_config_from_json(const json& j, gp_config base = {});
json to_json(const fitness_params& p);
fitness_params fitness_params_from_json(const json& j, fitness_params base = {});

json to_json(const world_state& s);
world_state world_from_json(const json& j);

json to_json(const demonstration& d);
demonstration demonstration_from_json(const json& j);

json to_json(const generation_record& r);
generation_record generation_record_from_json(const json& j);
/// One compact line of the run log.
std::string run_log_line(const generation_record& r);

json to_json(const fitness_terms& t);

json checkpoint_to_json(const evolution_state& s);
evolution_state checkpoint_from_json(const json& j);

/// Saved-tree document {format_version, genome, pool_id}.
json tree_file(const behavior_tree& t, const std::string& pool_id);
behavior_tree tree_from_file(const json& j, const std::string& expected_pool_id = "");
/// Nested {id, type, behavior, children} form for viewers.
json tree_structure(const behavior_tree& t);

json to_json(const task_constraints& c);

/// Behavior ids, parameters and pre/post descriptors of every pool entry.
json pool_manifest(const gene_pool& pool);

/// One scripted command: {"pick": "<object>"} or
/// {"place": {"frame": "<frame>", "position": [x, y, z]}}.
demo_command demo_command_from_json(const json& j, const std::string& field = "command");
json to_json(const demo_command& c);

/// Accepts a recorded demonstration document or a script
/// {scenario_seed, setup: [commands], commands: [commands]}; a script is
/// executed from reset(scenario, scenario_seed) after running `setup`
/// unrecorded.
demonstration demonstration_from_document(const json& j, const scenario_config& scenario);

/// Rethrows a format_error with the line of its field located in `text` and
/// `source` as its origin.
[[noreturn]] void rethrow_with_line(const format_error& e, std::string_view text, const std::string& source);

std::string read_text_file(const std::filesystem::path& path);

/// Parses `path` and converts it with `convert`; format errors name the file
/// and the line of the offending field.
template <class Convert>
auto load_document(const std::filesystem::path& path, Convert&& convert) {
    const std::string text = read_text_file(path);
    const json doc = parse_json(text, path.string());
    try {
        return convert(doc);
    } catch (const format_error& e) {
        rethrow_with_line(e, text, path.string());
    }
}

} // namespace kitbt
