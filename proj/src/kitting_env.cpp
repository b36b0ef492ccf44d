#include "kitbt/kitting_env.hpp"

namespace kitbt {

kitting_environment::kitting_environment(world_state& world, env_options options, std::vector<subgoal_spec> subgoals)
    : world_(world), options_(options), subgoals_(std::move(subgoals)), reached_(subgoals_.size(), false) {
    if (options_.action_ticks == 0) {
        options_.action_ticks = 1;
    }
}

void kitting_environment::begin_tick() { ++world_.tick; }

double kitting_environment::subgoal_bonus() const {
    double total = 0.0;
    for (std::size_t i = 0; i < subgoals_.size(); ++i) {
        if (reached_[i]) {
            total += subgoals_[i].bonus;
        }
    }
    return total;
}

const kitting_environment::call& kitting_environment::lookup(const node& n) {
    const std::string key = token_of(n);
    if (auto it = cache_.find(key); it != cache_.end()) {
        return it->second;
    }
    const parsed_behavior p = parse_behavior(n.behavior);
    const bool is_condition = n.type == node_type::condition;
    const auto fail = [&]() { throw unknown_behavior(key); };
    call c{op::at, {}, {}, vec3::Zero(), {}};
    const auto target_args = [&] {
        if (p.args.size() != 5) {
            fail();
        }
        c.object = p.args[0];
        c.frame = p.args[1];
        try {
            c.position = vec3(parse_number(p.args[2]), parse_number(p.args[3]), parse_number(p.args[4]));
        } catch (const std::invalid_argument&) {
            fail();
        }
        try {
            world_.object(c.object);
            frame_origin(world_, c.frame);
        } catch (const world_error&) {
            fail();
        }
    };
    const auto object_arg = [&] {
        if (p.args.size() != 1) {
            fail();
        }
        c.object = p.args[0];
        if (world_.find(c.object) == nullptr) {
            fail();
        }
    };
    const auto no_args = [&] {
        if (!p.args.empty()) {
            fail();
        }
    };

    if (is_condition) {
        if (p.name == vocab::at) {
            c.what = op::at;
            target_args();
        } else if (p.name == vocab::holding) {
            c.what = op::holding;
            object_arg();
        } else if (p.name == vocab::gripper_empty) {
            c.what = op::gripper_empty;
            no_args();
        } else if (p.name == vocab::holding_any) {
            c.what = op::holding_any;
            no_args();
        } else {
            fail();
        }
    } else {
        if (p.name == vocab::pick) {
            c.what = op::pick;
            object_arg();
        } else if (p.name == vocab::place) {
            c.what = op::place;
            target_args();
        } else if (p.name == vocab::pickplace) {
            c.what = op::pickplace;
            target_args();
            c.expansion = behavior_tree{vocab::pick_place_subtree(c.object, c.frame, c.position)};
        } else if (p.name == vocab::open) {
            c.what = op::open;
            no_args();
        } else if (p.name == vocab::close) {
            c.what = op::close;
            no_args();
        } else if (p.name == vocab::drop_held) {
            c.what = op::drop_held;
            no_args();
        } else {
            fail();
        }
    }
    return cache_.emplace(key, std::move(c)).first->second;
}

void kitting_environment::after_action() {
    ++actions_;
    for (std::size_t i = 0; i < subgoals_.size(); ++i) {
        if (!reached_[i] && goal_satisfied(world_, subgoals_[i].goal)) {
            reached_[i] = true;
        }
    }
}

status kitting_environment::perform(const call& c) {
    const auto result = [](bool ok) { return ok ? status::success : status::failure; };
    switch (c.what) {
        case op::at:
            return result(object_at(world_, c.object, c.position, c.frame, options_.tolerance));
        case op::holding:
            return result(world_.gripper.holding == c.object);
        case op::gripper_empty:
            return result(world_.gripper.holding.empty());
        case op::holding_any:
            return result(!world_.gripper.holding.empty());
        case op::pick: {
            const bool ok = apply_pick(world_, c.object);
            after_action();
            return result(ok);
        }
        case op::place: {
            if (world_.gripper.holding != c.object) {
                return status::failure;
            }
            const bool ok = apply_place(world_, c.position, c.frame);
            after_action();
            return result(ok);
        }
        case op::pickplace:
            return tick_subtree(c.expansion.root, *this);
        case op::open:
            apply_drop(world_);
            after_action();
            return status::success;
        case op::close:
            return result(!world_.gripper.holding.empty());
        case op::drop_held: {
            const bool ok = apply_drop(world_);
            after_action();
            return result(ok);
        }
    }
    return status::failure;
}

status kitting_environment::execute(const node& behavior_node) {
    const call& c = lookup(behavior_node);
    if (behavior_node.type == node_type::condition || c.what == op::pickplace || options_.action_ticks == 1) {
        return perform(c);
    }
    const std::string key = token_of(behavior_node);
    if (in_progress_ != key) {
        // Starting a new action preempts whatever was running.
        in_progress_ = key;
        remaining_ = options_.action_ticks - 1;
        return status::running;
    }
    if (--remaining_ > 0) {
        return status::running;
    }
    in_progress_.clear();
    return perform(c);
}

} // namespace kitbt
