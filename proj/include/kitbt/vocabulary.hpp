#pragma once

// Behavior text for the kitting domain. Parameterized behaviors are written
// name(arg,arg,...) with numbers in shortest round-trip form, so identical
// parameters always give identical text.

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kitbt/behavior_tree.hpp"

namespace kitbt {

using vec3 = Eigen::Vector3d;

struct parsed_behavior {
    std::string name;
    std::vector<std::string> args;
};

parsed_behavior parse_behavior(std::string_view text);
std::string format_number(double value);
double parse_number(std::string_view text);
std::string format_position(const vec3& p);

namespace vocab {

inline constexpr std::string_view at = "at";
inline constexpr std::string_view holding = "holding";
inline constexpr std::string_view gripper_empty = "gripper_empty";
inline constexpr std::string_view holding_any = "holding_any";
inline constexpr std::string_view pick = "pick";
inline constexpr std::string_view place = "place";
inline constexpr std::string_view pickplace = "pickplace";
inline constexpr std::string_view open = "open";
inline constexpr std::string_view close = "close";
inline constexpr std::string_view drop_held = "drop_held";

std::string at_text(std::string_view object, std::string_view frame, const vec3& position);
std::string holding_text(std::string_view object);
std::string pick_text(std::string_view object);
std::string place_text(std::string_view object, std::string_view frame, const vec3& position);
std::string pickplace_text(std::string_view object, std::string_view frame, const vec3& position);

/// The pick-and-place subtree: "<O> at <P> in <F>" reached by holding <O>
/// (picking it from an empty gripper) and placing it.
node pick_place_subtree(std::string_view object, std::string_view frame, const vec3& position);

} // namespace vocab

} // namespace kitbt
