#include "kitbt/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kitbt {

namespace {

constexpr double eps = 1e-9;

bool is_box(const scene_object& o) { return o.kind == object_kind::movable_box; }

double top_of(const scene_object& o) { return o.position.z() + o.size / 2.0; }

std::string floor_below(const world_state& s, const scene_object& b) {
    if (const scene_object* kit = s.kit()) {
        const double half = kit->size / 2.0;
        if (std::abs(b.position.x() - kit->position.x()) <= half + eps &&
            std::abs(b.position.y() - kit->position.y()) <= half + eps) {
            return kit->name;
        }
    }
    return std::string(table_name);
}

// Moves `b` horizontally away from `blocker` until the footprints only touch.
void slide_off(scene_object& b, const scene_object& blocker) {
    const double dx = b.position.x() - blocker.position.x();
    const double dy = b.position.y() - blocker.position.y();
    const double reach = (b.size + blocker.size) / 2.0;
    if (std::abs(dx) >= std::abs(dy)) {
        b.position.x() = blocker.position.x() + (dx < 0.0 ? -reach : reach);
    } else {
        b.position.y() = blocker.position.y() + (dy < 0.0 ? -reach : reach);
    }
}

void rest(world_state& s, scene_object& b, const std::vector<const scene_object*>& settled) {
    const std::size_t max_slides = 4 * (settled.size() + 1);
    for (std::size_t attempt = 0;; ++attempt) {
        double support_top = 0.0;
        std::string support = floor_below(s, b);
        const scene_object* blocker = nullptr;
        for (const scene_object* o : settled) {
            const double f = footprint_overlap(b, *o);
            if (f >= 0.5 - eps && top_of(*o) > support_top + eps) {
                support_top = top_of(*o);
                support = o->name;
            }
        }
        if (attempt < max_slides) {
            for (const scene_object* o : settled) {
                const double f = footprint_overlap(b, *o);
                if (f > eps && f < 0.5 - eps && top_of(*o) > support_top + eps) {
                    blocker = o;
                    break;
                }
            }
        } else {
            // Give up sliding: rest on the highest box overlapping at all.
            for (const scene_object* o : settled) {
                if (footprint_overlap(b, *o) > eps && top_of(*o) > support_top + eps) {
                    support_top = top_of(*o);
                    support = o->name;
                }
            }
        }
        if (blocker == nullptr) {
            b.position.z() = support_top + b.size / 2.0;
            b.supported_by = support;
            return;
        }
        slide_off(b, *blocker);
    }
}

void settle_impl(world_state& s, std::string_view released) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const auto& o = s.objects[i];
        if (is_box(o) && o.name != s.gripper.holding) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& oa = s.objects[a];
        const auto& ob = s.objects[b];
        const bool ra = oa.name == released;
        const bool rb = ob.name == released;
        if (ra != rb) {
            return rb;
        }
        return oa.position.z() < ob.position.z();
    });
    std::vector<const scene_object*> settled;
    settled.reserve(order.size());
    for (std::size_t i : order) {
        rest(s, s.objects[i], settled);
        settled.push_back(&s.objects[i]);
    }
}

} // namespace

const scene_object* world_state::find(std::string_view name) const {
    for (const auto& o : objects) {
        if (o.name == name) {
            return &o;
        }
    }
    return nullptr;
}

const scene_object& world_state::object(std::string_view name) const {
    const scene_object* o = find(name);
    if (o == nullptr) {
        throw unknown_object(name);
    }
    return *o;
}

scene_object& world_state::object(std::string_view name) {
    return const_cast<scene_object&>(static_cast<const world_state&>(*this).object(name));
}

const scene_object* world_state::kit() const {
    for (const auto& o : objects) {
        if (o.kind == object_kind::kitting_box) {
            return &o;
        }
    }
    return nullptr;
}

std::vector<std::string> candidate_frames(const world_state& s) {
    std::vector<std::string> out{std::string(base_frame)};
    for (const auto& o : s.objects) {
        if (o.kind != object_kind::table) {
            out.push_back(o.name);
        }
    }
    return out;
}

vec3 frame_origin(const world_state& s, std::string_view frame) {
    if (frame == base_frame) {
        return vec3::Zero();
    }
    const scene_object* o = s.find(frame);
    if (o == nullptr || o->kind == object_kind::table) {
        throw unknown_frame(frame);
    }
    return o->position;
}

vec3 to_base(const world_state& s, const vec3& p, std::string_view frame) { return p + frame_origin(s, frame); }
vec3 from_base(const world_state& s, const vec3& p, std::string_view frame) { return p - frame_origin(s, frame); }

double footprint_overlap(const scene_object& falling, const scene_object& other) {
    const auto overlap_1d = [](double a, double sa, double b, double sb) {
        const double lo = std::max(a - sa / 2.0, b - sb / 2.0);
        const double hi = std::min(a + sa / 2.0, b + sb / 2.0);
        return std::max(0.0, hi - lo);
    };
    const double wx = overlap_1d(falling.position.x(), falling.size, other.position.x(), other.size);
    const double wy = overlap_1d(falling.position.y(), falling.size, other.position.y(), other.size);
    return wx * wy / (falling.size * falling.size);
}

bool is_clear(const world_state& s, std::string_view object) {
    return std::none_of(s.objects.begin(), s.objects.end(), [&](const scene_object& o) {
        return is_box(o) && o.supported_by == object && o.name != s.gripper.holding;
    });
}

bool apply_pick(world_state& s, std::string_view object) {
    scene_object& o = s.object(object);
    ++s.steps;
    if (!is_box(o) || !s.gripper.holding.empty() || !is_clear(s, object)) {
        return false;
    }
    s.gripper.holding = o.name;
    s.gripper.position = o.position + vec3(0.0, 0.0, grasp_lift);
    o.position = s.gripper.position;
    o.supported_by.clear();
    return true;
}

bool apply_place(world_state& s, const vec3& target, std::string_view frame) {
    const vec3 release = to_base(s, target, frame);
    ++s.steps;
    if (s.gripper.holding.empty()) {
        return false;
    }
    scene_object& o = s.object(s.gripper.holding);
    o.position = release;
    s.gripper.position = release + vec3(0.0, 0.0, grasp_lift);
    const std::string released = s.gripper.holding;
    s.gripper.holding.clear();
    settle_impl(s, released);
    return true;
}

bool apply_drop(world_state& s) {
    ++s.steps;
    if (s.gripper.holding.empty()) {
        return false;
    }
    const std::string released = s.gripper.holding;
    s.gripper.holding.clear();
    settle_impl(s, released);
    return true;
}

void settle(world_state& s) { settle_impl(s, {}); }

double target_distance_m(const world_state& s, const goal_target& target) {
    const vec3 goal = to_base(s, target.position, target.frame);
    return (s.object(target.object).position - goal).norm();
}

bool object_at(const world_state& s, std::string_view object, const vec3& target, std::string_view frame,
               double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    const vec3 goal = to_base(s, target, frame);
    return (s.object(object).position - goal).norm() <= tol + eps;
}

bool goal_satisfied(const world_state& s, const goal_spec& goal) {
    return std::all_of(goal.targets.begin(), goal.targets.end(), [&](const goal_target& t) {
        return object_at(s, t.object, t.position, t.frame, t.tolerance);
    });
}

double goal_distance_mm(const world_state& s, const goal_spec& goal) {
    double total = 0.0;
    for (const auto& t : goal.targets) {
        total += std::max(0.0, target_distance_m(s, t) * 1000.0);
    }
    return total;
}

} // namespace kitbt
