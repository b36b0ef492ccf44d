#include "kitbt/behavior_tree.hpp"

namespace kitbt {

std::string_view to_string(violation_kind k) {
    switch (k) {
        case violation_kind::same_control_on_consecutive_levels:
            return "SameControlOnConsecutiveLevels";
        case violation_kind::condition_as_last_child:
            return "ConditionAsLastChild";
        case violation_kind::childless_control:
            return "ChildlessControl";
        case violation_kind::identical_adjacent_nodes:
            return "IdenticalAdjacentNodes";
    }
    return "Unknown";
}

namespace {

void check(const node& n, std::size_t id, std::vector<constraint_violation>& out) {
    if (!n.is_control()) {
        return;
    }
    if (n.children.empty()) {
        out.push_back({violation_kind::childless_control, id});
        return;
    }
    std::size_t cursor = id + 1;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        const node& c = n.children[i];
        if (c.type == n.type) {
            out.push_back({violation_kind::same_control_on_consecutive_levels, cursor});
        }
        if (i > 0 && c == n.children[i - 1]) {
            out.push_back({violation_kind::identical_adjacent_nodes, cursor});
        }
        if (i + 1 == n.children.size() && c.type == node_type::condition) {
            out.push_back({violation_kind::condition_as_last_child, cursor});
        }
        check(c, cursor, out);
        cursor += size(c);
    }
}

} // namespace

std::vector<constraint_violation> validate(const behavior_tree& t) {
    std::vector<constraint_violation> out;
    check(t.root, 0, out);
    return out;
}

} // namespace kitbt
