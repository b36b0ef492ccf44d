#include <algorithm>
#include <set>

#include "kitbt/lfd.hpp"

namespace kitbt {

namespace {

struct condition {
    condition_kind kind;
    const goal_target* goal;
};

std::string condition_text(const condition& c) {
    switch (c.kind) {
        case condition_kind::object_at:
            return vocab::at_text(c.goal->object, c.goal->frame, c.goal->position);
        case condition_kind::holding:
            return vocab::holding_text(c.goal->object);
        case condition_kind::gripper_empty:
            return std::string(vocab::gripper_empty);
    }
    return {};
}

std::string action_text(const action_descriptor& a, const goal_target& g) {
    if (a.name == vocab::place) {
        return vocab::place_text(g.object, g.frame, g.position);
    }
    if (a.name == vocab::pick) {
        return vocab::pick_text(g.object);
    }
    if (a.name == vocab::pickplace) {
        return vocab::pickplace_text(g.object, g.frame, g.position);
    }
    return a.name;
}

// Fallback(condition, Sequence(expanded preconditions..., action)); a
// condition with no achiever stays a plain check.
node expand(const condition& c, const std::vector<action_descriptor>& library, std::set<condition_kind>& open_set,
            bool must_achieve) {
    const auto achiever = std::find_if(library.begin(), library.end(),
                                       [&](const action_descriptor& a) { return a.achieves == c.kind; });
    if (achiever == library.end() || open_set.count(c.kind)) {
        if (must_achieve) {
            throw no_achieving_action(condition_text(c));
        }
        return node::condition(condition_text(c));
    }
    open_set.insert(c.kind);
    std::vector<node> steps;
    for (condition_kind pre : achiever->requires_) {
        steps.push_back(expand(condition{pre, c.goal}, library, open_set, false));
    }
    open_set.erase(c.kind);
    steps.push_back(node::action(action_text(*achiever, *c.goal)));
    return node::fallback({node::condition(condition_text(c)), node::sequence(std::move(steps))});
}

} // namespace

behavior_tree backchain(const task_constraints& constraints, const std::vector<action_descriptor>& library) {
    if (constraints.goals.empty()) {
        throw std::invalid_argument("backchain needs at least one goal");
    }
    // Stable topological order: each goal waits for the goals it must follow.
    std::vector<const goal_target*> remaining;
    for (const auto& g : constraints.goals) {
        remaining.push_back(&g);
    }
    const auto must_follow = [&](const goal_target* later, const goal_target* earlier) {
        return std::find(constraints.order.begin(), constraints.order.end(),
                         std::pair{earlier->object, later->object}) != constraints.order.end();
    };
    std::vector<node> subtrees;
    while (!remaining.empty()) {
        auto next = std::find_if(remaining.begin(), remaining.end(), [&](const goal_target* g) {
            return std::none_of(remaining.begin(), remaining.end(),
                                [&](const goal_target* h) { return h != g && must_follow(g, h); });
        });
        if (next == remaining.end()) {
            throw std::invalid_argument("ordering constraints are cyclic");
        }
        std::set<condition_kind> open_set;
        subtrees.push_back(expand(condition{condition_kind::object_at, *next}, library, open_set, true));
        remaining.erase(next);
    }
    auto tree = normalize(behavior_tree{node::sequence(std::move(subtrees))});
    if (!tree || !is_valid(*tree)) {
        throw std::logic_error("backchained tree violates the structural constraints");
    }
    return *tree;
}

} // namespace kitbt
