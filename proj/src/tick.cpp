#include "kitbt/behavior_tree.hpp"

namespace kitbt {

namespace {

status tick_node(const node& n, std::size_t id, execution_environment& env, const tick_observer& observer) {
    status result = status::failure;
    switch (n.type) {
        case node_type::sequence:
        case node_type::fallback: {
            // Sequence stops at the first non-Success child, Fallback at the first non-Failure.
            const status pass = n.type == node_type::sequence ? status::success : status::failure;
            result = pass;
            std::size_t cursor = id + 1;
            for (const auto& c : n.children) {
                const status s = tick_node(c, cursor, env, observer);
                cursor += size(c);
                if (s != pass) {
                    result = s;
                    break;
                }
            }
            break;
        }
        case node_type::action:
            result = env.execute(n);
            break;
        case node_type::condition:
            result = env.execute(n);
            if (result == status::running) {
                throw std::logic_error("condition '" + n.behavior + "' returned Running");
            }
            break;
    }
    if (observer) {
        observer(id, result);
    }
    return result;
}

} // namespace

status tick(const behavior_tree& t, execution_environment& env, const tick_observer& observer) {
    env.begin_tick();
    return tick_node(t.root, 0, env, observer);
}

status tick_subtree(const node& n, execution_environment& env) { return tick_node(n, 0, env, {}); }

run_result run_to_completion(const behavior_tree& t, execution_environment& env, std::size_t max_ticks,
                             const tick_observer& observer) {
    if (max_ticks == 0) {
        throw std::invalid_argument("max_ticks must be positive");
    }
    run_result r;
    while (r.ticks < max_ticks) {
        r.final_status = tick(t, env, observer);
        ++r.ticks;
        if (r.final_status != status::running) {
            return r;
        }
    }
    r.timed_out = true;
    return r;
}

} // namespace kitbt
