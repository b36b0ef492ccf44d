#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kitbt/behavior_tree.hpp"
#include "kitbt/gene_pool.hpp"
#include "kitbt/world.hpp"

namespace kitbt {

enum class demo_action_type { pick, place };

std::string_view to_string(demo_action_type t);
demo_action_type demo_action_type_from_string(std::string_view s);

struct demo_action {
    demo_action_type type = demo_action_type::pick;
    std::string object;
    std::size_t index = 0; // position in the demonstration
    // Place only: release position expressed in every candidate frame except
    // the held object's own.
    std::map<std::string, vec3> positions;

    friend bool operator==(const demo_action&, const demo_action&) = default;
};

struct demonstration {
    world_state initial;
    std::vector<demo_action> actions;
    world_state final_state;

    friend bool operator==(const demonstration&, const demonstration&) = default;
};

/// One user command: pick `object`, or release the held object at `position`
/// in `frame`.
struct demo_command {
    demo_action_type type = demo_action_type::pick;
    std::string object; // pick target; for place, optional check on the held object
    std::string frame{base_frame};
    vec3 position = vec3::Zero();
};

class invalid_action : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class inconsistent_demos : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class no_achieving_action : public std::runtime_error {
public:
    explicit no_achieving_action(const std::string& condition)
        : std::runtime_error("no library action achieves " + condition), condition(condition) {}
    std::string condition;
};

/// Executes the commands from `initial` and records them.
demonstration record(const world_state& initial, const std::vector<demo_command>& commands);

/// Re-executes the recorded actions from the recorded initial state.
world_state replay(const demonstration& demo);

inline constexpr std::size_t min_demos_for_frame_inference = 3;

struct action_cluster {
    demo_action_type type = demo_action_type::pick;
    std::string object;
    std::size_t rank = 0; // occurrence among actions on `object`
    std::vector<demo_action> members;
    std::vector<std::size_t> demo_of_member;
    std::string frame{base_frame};
    vec3 representative = vec3::Zero(); // place only
    double dispersion = 0.0;            // in `frame`, meters
};

/// Max pairwise distance of the members' positions in `frame`.
double dispersion(const std::vector<demo_action>& members, const std::string& frame);

/// Clusters are ordered by (object, rank).
std::vector<action_cluster> cluster(const std::vector<demonstration>& demos);

struct task_constraints {
    std::vector<goal_target> goals;                     // topologically ordered
    std::vector<std::pair<std::string, std::string>> order; // object placed before object in every demo
};

task_constraints infer_goals(const std::vector<demonstration>& demos, double tolerance = default_tolerance);

/// Each goal becomes a pick-and-place subtree grown by regressing unmet
/// preconditions; subtrees are joined by a Sequence in an
/// order honoring `constraints.order`.
behavior_tree backchain(const task_constraints& constraints,
                        const std::vector<action_descriptor>& library = pick_place_library());

} // namespace kitbt
