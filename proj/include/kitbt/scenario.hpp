#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kitbt/world.hpp"

namespace kitbt {

struct sampling_region {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;

    friend bool operator==(const sampling_region&, const sampling_region&) = default;
};

// Exactly one of `table_position`, `on` or `region` is set.
struct object_placement {
    std::optional<std::array<double, 2>> table_position;
    std::optional<std::string> on;
    std::optional<sampling_region> region;

    friend bool operator==(const object_placement&, const object_placement&) = default;
};

struct box_spec {
    std::string name;
    double size = default_box_size;
    object_placement placement;

    friend bool operator==(const box_spec&, const box_spec&) = default;
};

struct kit_spec {
    std::string name = "KittingBox";
    std::array<double, 2> center{0.4, 0.0};
    int grid = 3;            // cells per side
    double cell_pitch = 0.0; // 0 means the scenario box size

    friend bool operator==(const kit_spec&, const kit_spec&) = default;
};

struct scenario_config {
    std::string name;
    std::string description;
    double box_size = default_box_size;
    double tolerance = default_tolerance;
    // Sampled table positions snap to multiples of this pitch (0: box size).
    double lattice_pitch = 0.0;
    std::optional<kit_spec> kit;
    std::vector<box_spec> boxes;
    goal_spec goal;
    std::vector<subgoal_spec> subgoals;

    double kit_pitch() const;
    double pitch() const { return lattice_pitch > 0.0 ? lattice_pitch : box_size; }
    std::vector<std::string> movable_names() const;

    friend bool operator==(const scenario_config&, const scenario_config&) = default;
};

/// Builds the initial world. Deterministic in (scenario, seed).
world_state reset(const scenario_config& scenario, std::uint64_t seed);

/// Validates object names, placements and goal frames; throws world_error.
void check_scenario(const scenario_config& scenario);

} // namespace kitbt
