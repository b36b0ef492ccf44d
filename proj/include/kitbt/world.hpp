#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kitbt/vocabulary.hpp"

namespace kitbt {

inline constexpr std::string_view base_frame = "base";
inline constexpr std::string_view table_name = "table";

inline constexpr double default_box_size = 0.05;
inline constexpr double default_tolerance = 0.01;

enum class object_kind { movable_box, kitting_box, table };

struct scene_object {
    std::string name;
    object_kind kind = object_kind::movable_box;
    double size = default_box_size; // side length; the kit box stores its floor side
    vec3 position = vec3::Zero();   // centroid in the base frame; kit box: floor center
    std::string supported_by;       // movable boxes only

    friend bool operator==(const scene_object&, const scene_object&) = default;
};

struct gripper_state {
    std::string holding; // empty when the gripper is empty
    vec3 position = vec3(0.0, 0.0, 0.3);

    friend bool operator==(const gripper_state&, const gripper_state&) = default;
};

struct world_state {
    std::vector<scene_object> objects; // scenario order
    gripper_state gripper;
    std::uint64_t tick = 0;
    std::uint64_t steps = 0; // applied actions
    std::uint64_t seed = 0;

    const scene_object& object(std::string_view name) const;
    scene_object& object(std::string_view name);
    const scene_object* find(std::string_view name) const;
    const scene_object* kit() const;

    friend bool operator==(const world_state&, const world_state&) = default;
};

struct goal_target {
    std::string object;
    std::string frame;
    vec3 position = vec3::Zero();
    double tolerance = default_tolerance;

    friend bool operator==(const goal_target&, const goal_target&) = default;
};

struct goal_spec {
    std::vector<goal_target> targets;

    friend bool operator==(const goal_spec&, const goal_spec&) = default;
};

struct subgoal_spec {
    goal_spec goal;
    double bonus = 100.0;

    friend bool operator==(const subgoal_spec&, const subgoal_spec&) = default;
};

class world_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class unknown_object : public world_error {
public:
    explicit unknown_object(std::string_view name) : world_error("unknown object: " + std::string(name)) {}
};
class unknown_frame : public world_error {
public:
    explicit unknown_frame(std::string_view name) : world_error("unknown frame: " + std::string(name)) {}
};
class overlapping_initial_placement : public world_error {
public:
    using world_error::world_error;
};

/// Frames usable for expressing positions: "base", every movable box, the kit.
std::vector<std::string> candidate_frames(const world_state& s);
vec3 frame_origin(const world_state& s, std::string_view frame);
vec3 to_base(const world_state& s, const vec3& p, std::string_view frame);
vec3 from_base(const world_state& s, const vec3& p, std::string_view frame);

/// Fraction of the footprint of `falling` covered by the footprint of `other`.
double footprint_overlap(const scene_object& falling, const scene_object& other);

/// Lift applied to a picked box above its resting centroid.
inline constexpr double grasp_lift = 0.1;

/// Grasps `object` when the gripper is empty and nothing rests on it.
bool apply_pick(world_state& s, std::string_view object);
/// Releases the held object at `target` in `frame` and settles the scene.
bool apply_place(world_state& s, const vec3& target, std::string_view frame);
/// Releases the held object straight below the gripper.
bool apply_drop(world_state& s);
/// Drops every free box onto the highest surface covering at least half of its
/// footprint. Boxes overlapping less than half of a taller box slide off it.
void settle(world_state& s);

bool object_at(const world_state& s, std::string_view object, const vec3& target, std::string_view frame, double tol);
bool goal_satisfied(const world_state& s, const goal_spec& goal);
double target_distance_m(const world_state& s, const goal_target& target);
double goal_distance_mm(const world_state& s, const goal_spec& goal);

/// True when nothing is stacked on `object`.
bool is_clear(const world_state& s, std::string_view object);

} // namespace kitbt
