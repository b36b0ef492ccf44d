#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "kitbt/behavior_tree.hpp"
#include "kitbt/world.hpp"

namespace kitbt {

struct env_options {
    double tolerance = default_tolerance;
    // Ticks an action stays Running before its effect applies; 1 = instant.
    std::size_t action_ticks = 1;
};

/// Behavior implementations over a world_state owned by the caller. One
/// instance per episode: in-progress action memory starts empty.
class kitting_environment : public execution_environment {
public:
    kitting_environment(world_state& world, env_options options = {}, std::vector<subgoal_spec> subgoals = {});

    status execute(const node& behavior_node) override;
    void begin_tick() override;

    /// Subgoals latched as satisfied after any action during the episode.
    const std::vector<bool>& subgoals_reached() const { return reached_; }
    double subgoal_bonus() const;
    std::size_t actions_executed() const { return actions_; }

private:
    enum class op {
        at, holding, gripper_empty, holding_any,
        pick, place, pickplace, open, close, drop_held,
    };
    struct call {
        op what;
        std::string object;
        std::string frame;
        vec3 position = vec3::Zero();
        behavior_tree expansion; // pickplace only
    };

    const call& lookup(const node& n);
    status perform(const call& c);
    void after_action();

    world_state& world_;
    env_options options_;
    std::vector<subgoal_spec> subgoals_;
    std::vector<bool> reached_;
    std::unordered_map<std::string, call> cache_;
    std::string in_progress_;
    std::size_t remaining_ = 0;
    std::size_t actions_ = 0;
};

} // namespace kitbt
