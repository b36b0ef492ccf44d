#include "kitbt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kitbt {

namespace {

constexpr int max_sampling_attempts = 1000;

bool footprints_collide(const world_state& s, const scene_object& candidate) {
    for (const auto& o : s.objects) {
        if (o.kind == object_kind::table || o.name == candidate.name) {
            continue;
        }
        if (footprint_overlap(candidate, o) > 1e-9) {
            return true;
        }
    }
    return false;
}

} // namespace

double scenario_config::kit_pitch() const {
    if (kit && kit->cell_pitch > 0.0) {
        return kit->cell_pitch;
    }
    return box_size;
}

std::vector<std::string> scenario_config::movable_names() const {
    std::vector<std::string> out;
    for (const auto& b : boxes) {
        out.push_back(b.name);
    }
    return out;
}

void check_scenario(const scenario_config& scenario) {
    std::vector<std::string> seen;
    const auto known = [&](const std::string& n) {
        return std::find(seen.begin(), seen.end(), n) != seen.end();
    };
    if (scenario.kit) {
        seen.push_back(scenario.kit->name);
    }
    for (const auto& b : scenario.boxes) {
        if (b.name.empty() || known(b.name) || b.name == base_frame || b.name == table_name) {
            throw world_error("invalid or duplicate object name '" + b.name + "'");
        }
        if (!(b.size > 0.0)) {
            throw world_error("box '" + b.name + "' needs a positive size");
        }
        const auto& p = b.placement;
        const int modes = int(p.table_position.has_value()) + int(p.on.has_value()) + int(p.region.has_value());
        if (modes != 1) {
            throw world_error("box '" + b.name + "' needs exactly one of position, on, region");
        }
        if (p.on && !known(*p.on)) {
            throw world_error("box '" + b.name + "' is placed on unknown object '" + *p.on + "'");
        }
        seen.push_back(b.name);
    }
    const auto check_goal = [&](const goal_spec& g) {
        for (const auto& t : g.targets) {
            if (!known(t.object) || (scenario.kit && t.object == scenario.kit->name)) {
                throw unknown_object(t.object);
            }
            if (t.frame != base_frame && !known(t.frame)) {
                throw unknown_frame(t.frame);
            }
            if (!(t.tolerance > 0.0)) {
                throw world_error("goal tolerance for '" + t.object + "' must be positive");
            }
        }
    };
    check_goal(scenario.goal);
    for (const auto& sg : scenario.subgoals) {
        check_goal(sg.goal);
    }
}

world_state reset(const scenario_config& scenario, std::uint64_t seed) {
    check_scenario(scenario);
    world_state s;
    s.seed = seed;
    s.objects.push_back(scene_object{std::string(table_name), object_kind::table, 0.0, vec3::Zero(), {}});
    if (scenario.kit) {
        const auto& k = *scenario.kit;
        s.objects.push_back(scene_object{k.name, object_kind::kitting_box, k.grid * scenario.kit_pitch(),
                                         vec3(k.center[0], k.center[1], 0.0), {}});
    }
    std::mt19937_64 rng(seed);
    const double pitch = scenario.pitch();
    for (const auto& b : scenario.boxes) {
        scene_object box{b.name, object_kind::movable_box, b.size, vec3::Zero(), {}};
        const auto& p = b.placement;
        if (p.on) {
            const scene_object& below = s.object(*p.on);
            box.position = vec3(below.position.x(), below.position.y(), below.position.z() + 1.0);
        } else if (p.table_position) {
            box.position = vec3((*p.table_position)[0], (*p.table_position)[1], 0.0);
            if (footprints_collide(s, box)) {
                throw overlapping_initial_placement("box '" + b.name + "' overlaps another object");
            }
        } else {
            const auto& r = *p.region;
            const auto lo_x = static_cast<long>(std::ceil(r.x_min / pitch - 1e-9));
            const auto hi_x = static_cast<long>(std::floor(r.x_max / pitch + 1e-9));
            const auto lo_y = static_cast<long>(std::ceil(r.y_min / pitch - 1e-9));
            const auto hi_y = static_cast<long>(std::floor(r.y_max / pitch + 1e-9));
            if (hi_x < lo_x || hi_y < lo_y) {
                throw overlapping_initial_placement("sampling region for '" + b.name + "' holds no lattice point");
            }
            std::uniform_int_distribution<long> pick_x(lo_x, hi_x);
            std::uniform_int_distribution<long> pick_y(lo_y, hi_y);
            bool placed = false;
            for (int attempt = 0; attempt < max_sampling_attempts && !placed; ++attempt) {
                const long ix = pick_x(rng);
                const long iy = pick_y(rng);
                box.position = vec3(static_cast<double>(ix) * pitch, static_cast<double>(iy) * pitch, 0.0);
                placed = !footprints_collide(s, box);
            }
            if (!placed) {
                throw overlapping_initial_placement("no free spot for '" + b.name + "' in its sampling region");
            }
        }
        s.objects.push_back(std::move(box));
        settle(s);
    }
    return s;
}

} // namespace kitbt
