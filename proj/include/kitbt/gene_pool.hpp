#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kitbt/behavior_tree.hpp"
#include "kitbt/scenario.hpp"

namespace kitbt {

enum class behavior_kind { action, condition };

// Offsets are in units of the reference box side.
struct relative_position {
    std::string label;
    vec3 offset_in_sides = vec3::Zero();
};

struct pool_config {
    std::vector<relative_position> relative_positions{
        {"left", vec3(-1.0, 0.0, 0.0)},
        {"right", vec3(1.0, 0.0, 0.0)},
        {"above", vec3(0.0, 1.0, 0.0)},
        {"below", vec3(0.0, -1.0, 0.0)},
        {"on_top", vec3(0.0, 0.0, 1.0)},
    };
    int kit_grid = 3; // kit_grid x kit_grid cells on the kit floor
    std::vector<std::string> gripper_behaviors{"open!", "close!", "holding_any?", "gripper_empty?", "drop_held!"};
};

struct behavior_template {
    std::string behavior_id; // behavior text without the '!' / '?' marker
    behavior_kind kind = behavior_kind::action;
    std::string object;
    std::string frame;
    vec3 position = vec3::Zero();
    std::string position_label;
    std::vector<std::string> preconditions;
    std::vector<std::string> postconditions;
    genome expansion; // empty for primitive behaviors

    node as_node() const;
    bool composite() const { return !expansion.empty(); }
};

// Planner-side description of an action: the condition it achieves for an
// object and the conditions it needs on that same object.
enum class condition_kind { object_at, holding, gripper_empty };

std::string_view to_string(condition_kind k);

struct action_descriptor {
    std::string name;
    condition_kind achieves;
    std::vector<condition_kind> requires_;
};

/// pick(O): gripper_empty -> holding(O); place(O,F,P): holding(O) -> at(O,F,P);
/// optionally drop_held: -> gripper_empty.
std::vector<action_descriptor> pick_place_library(bool with_drop_held = false);

class empty_scenario : public std::runtime_error {
public:
    empty_scenario() : std::runtime_error("scenario has no movable objects") {}
};

class gene_pool {
public:
    gene_pool() = default;
    explicit gene_pool(std::vector<behavior_template> behaviors);

    const std::vector<behavior_template>& behaviors() const { return behaviors_; }
    std::size_t count() const { return behaviors_.size(); }
    const behavior_template* find(std::string_view behavior_id) const;
    /// Genome fragment a behavior stands for; primitives expand to themselves.
    genome expand(std::string_view behavior_id) const;
    /// Node count with every composite gene counted by its expansion.
    std::size_t expanded_size(const behavior_tree& t) const;
    behavior_tree expand_all(const behavior_tree& t) const;
    /// Stable fingerprint of the ordered behavior list.
    const std::string& id() const { return id_; }

private:
    std::vector<behavior_template> behaviors_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string id_;
};

/// One composite pick&place gene per (movable object, target) pair, where the
/// targets are the relative positions around every other movable object plus
/// the kit cells, followed by the gripper behaviors. Pure in its inputs.
gene_pool generate_pool(const scenario_config& scenario, const pool_config& config = {});

} // namespace kitbt
