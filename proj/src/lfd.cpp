#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "kitbt/lfd.hpp"

namespace kitbt {

std::string_view to_string(demo_action_type t) { return t == demo_action_type::pick ? "pick" : "place"; }

demo_action_type demo_action_type_from_string(std::string_view s) {
    if (s == "pick") {
        return demo_action_type::pick;
    }
    if (s == "place") {
        return demo_action_type::place;
    }
    throw invalid_action("unknown demo action type '" + std::string(s) + "'");
}

demonstration record(const world_state& initial, const std::vector<demo_command>& commands) {
    demonstration demo;
    demo.initial = initial;
    world_state world = initial;
    for (const auto& cmd : commands) {
        demo_action a;
        a.type = cmd.type;
        a.index = demo.actions.size();
        if (cmd.type == demo_action_type::pick) {
            if (!world.gripper.holding.empty()) {
                throw invalid_action("pick " + cmd.object + " while holding " + world.gripper.holding);
            }
            const scene_object* o = world.find(cmd.object);
            if (o == nullptr || o->kind != object_kind::movable_box) {
                throw invalid_action("pick of unknown or immovable object '" + cmd.object + "'");
            }
            if (!apply_pick(world, cmd.object)) {
                throw invalid_action("pick " + cmd.object + " is not executable: something rests on it");
            }
            a.object = cmd.object;
        } else {
            if (world.gripper.holding.empty()) {
                throw invalid_action("place while holding nothing");
            }
            if (!cmd.object.empty() && cmd.object != world.gripper.holding) {
                throw invalid_action("place of " + cmd.object + " while holding " + world.gripper.holding);
            }
            a.object = world.gripper.holding;
            vec3 release;
            try {
                release = to_base(world, cmd.position, cmd.frame);
            } catch (const world_error& e) {
                throw invalid_action(e.what());
            }
            for (const auto& f : candidate_frames(world)) {
                if (f != a.object) {
                    a.positions.emplace(f, from_base(world, release, f));
                }
            }
            apply_place(world, release, base_frame);
        }
        demo.actions.push_back(std::move(a));
    }
    if (demo.actions.empty()) {
        throw invalid_action("a demonstration needs at least one action");
    }
    demo.final_state = world;
    return demo;
}

world_state replay(const demonstration& demo) {
    world_state world = demo.initial;
    for (const auto& a : demo.actions) {
        if (a.type == demo_action_type::pick) {
            if (!apply_pick(world, a.object)) {
                throw invalid_action("replayed pick of " + a.object + " failed");
            }
        } else {
            const auto it = a.positions.find(std::string(base_frame));
            if (it == a.positions.end() || !apply_place(world, it->second, base_frame)) {
                throw invalid_action("replayed place of " + a.object + " failed");
            }
        }
    }
    return world;
}

double dispersion(const std::vector<demo_action>& members, const std::string& frame) {
    double worst = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            worst = std::max(worst, (members[i].positions.at(frame) - members[j].positions.at(frame)).norm());
        }
    }
    return worst;
}

namespace {

bool frame_in_all(const std::vector<demo_action>& members, const std::string& frame) {
    return std::all_of(members.begin(), members.end(),
                       [&](const demo_action& m) { return m.positions.count(frame) != 0; });
}

// Snaps to the micrometer so frame arithmetic noise (0.4 + 0.025) does not
// leak into behavior ids.
double snap(double v) { return std::round(v * 1e6) / 1e6 + 0.0; }

// Mean over positions sorted lexicographically, so member order cannot
// change the rounding; offsets from the first point keep equal points exact.
vec3 canonical_mean(std::vector<vec3> points) {
    std::sort(points.begin(), points.end(), [](const vec3& a, const vec3& b) {
        return std::array{a.x(), a.y(), a.z()} < std::array{b.x(), b.y(), b.z()};
    });
    vec3 offset = vec3::Zero();
    for (const auto& p : points) {
        offset += p - points.front();
    }
    const vec3 mean = points.front() + offset / static_cast<double>(points.size());
    return vec3(snap(mean.x()), snap(mean.y()), snap(mean.z()));
}

} // namespace

std::vector<action_cluster> cluster(const std::vector<demonstration>& demos) {
    if (demos.empty()) {
        throw inconsistent_demos("clustering needs at least one demonstration");
    }
    std::map<std::pair<std::string, std::size_t>, action_cluster> by_key;
    for (std::size_t d = 0; d < demos.size(); ++d) {
        std::map<std::string, std::size_t> rank;
        for (const auto& a : demos[d].actions) {
            const std::size_t r = rank[a.object]++;
            auto [it, inserted] = by_key.try_emplace({a.object, r});
            action_cluster& c = it->second;
            if (inserted) {
                c.type = a.type;
                c.object = a.object;
                c.rank = r;
            } else if (c.type != a.type) {
                throw inconsistent_demos("action " + std::to_string(r) + " on " + a.object +
                                         " is a pick in one demonstration and a place in another");
            }
            c.members.push_back(a);
            c.demo_of_member.push_back(d);
        }
    }

    std::vector<action_cluster> out;
    for (auto& [key, c] : by_key) {
        if (c.type == demo_action_type::place) {
            // Candidate frames in recording order with base first.
            std::vector<std::string> frames{std::string(base_frame)};
            for (const auto& f : candidate_frames(demos[c.demo_of_member.front()].initial)) {
                if (f != base_frame && frame_in_all(c.members, f)) {
                    frames.push_back(f);
                }
            }
            c.frame = std::string(base_frame);
            c.dispersion = dispersion(c.members, c.frame);
            if (c.members.size() >= min_demos_for_frame_inference) {
                for (const auto& f : frames) {
                    const double d = dispersion(c.members, f);
                    if (d < c.dispersion - 1e-9) {
                        c.frame = f;
                        c.dispersion = d;
                    }
                }
            }
            std::vector<vec3> points;
            for (const auto& m : c.members) {
                points.push_back(m.positions.at(c.frame));
            }
            c.representative = canonical_mean(std::move(points));
        }
        out.push_back(std::move(c));
    }
    return out;
}

task_constraints infer_goals(const std::vector<demonstration>& demos, double tolerance) {
    const auto clusters = cluster(demos);
    // Last place cluster per object.
    std::map<std::string, const action_cluster*> last;
    for (const auto& c : clusters) {
        if (c.type == demo_action_type::place) {
            const action_cluster*& slot = last[c.object];
            if (slot == nullptr || slot->rank < c.rank) {
                slot = &c;
            }
        }
    }

    // Per demo, index of each goal object's final place.
    std::vector<std::map<std::string, std::size_t>> when(demos.size());
    for (const auto& [object, c] : last) {
        for (std::size_t i = 0; i < c->members.size(); ++i) {
            when[c->demo_of_member[i]][object] = c->members[i].index;
        }
    }

    task_constraints out;
    std::vector<std::string> objects;
    for (const auto& [object, c] : last) {
        objects.push_back(object);
    }
    std::set<std::pair<std::string, std::string>> before;
    for (const auto& a : objects) {
        for (const auto& b : objects) {
            if (a == b) {
                continue;
            }
            bool together = false;
            bool always = true;
            for (const auto& w : when) {
                if (w.count(a) && w.count(b)) {
                    together = true;
                    always = always && w.at(a) < w.at(b);
                }
            }
            if (together && always) {
                before.emplace(a, b);
                out.order.emplace_back(a, b);
            }
        }
    }

    // Kahn's algorithm; ready objects leave by earliest mean demo index.
    const auto mean_index = [&](const std::string& o) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& w : when) {
            if (w.count(o)) {
                sum += static_cast<double>(w.at(o));
                ++n;
            }
        }
        return n ? sum / static_cast<double>(n) : 0.0;
    };
    std::vector<std::string> remaining = objects;
    while (!remaining.empty()) {
        auto ready_end = std::stable_partition(remaining.begin(), remaining.end(), [&](const std::string& o) {
            return std::none_of(remaining.begin(), remaining.end(),
                                [&](const std::string& p) { return before.count({p, o}) != 0; });
        });
        auto pick = std::min_element(remaining.begin(), ready_end, [&](const std::string& x, const std::string& y) {
            return std::pair{mean_index(x), x} < std::pair{mean_index(y), y};
        });
        const action_cluster& c = *last.at(*pick);
        out.goals.push_back(goal_target{c.object, c.frame, c.representative, tolerance});
        remaining.erase(pick);
    }
    return out;
}

} // namespace kitbt
