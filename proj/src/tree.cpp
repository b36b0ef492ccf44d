#include "kitbt/behavior_tree.hpp"

#include <algorithm>

namespace kitbt {

std::string_view to_string(status s) {
    switch (s) {
        case status::success:
            return "Success";
        case status::failure:
            return "Failure";
        case status::running:
            return "Running";
    }
    return "Failure";
}

node node::sequence(std::vector<node> children) { return node{node_type::sequence, {}, std::move(children)}; }
node node::fallback(std::vector<node> children) { return node{node_type::fallback, {}, std::move(children)}; }
node node::action(std::string behavior) { return node{node_type::action, std::move(behavior), {}}; }
node node::condition(std::string behavior) { return node{node_type::condition, std::move(behavior), {}}; }

std::size_t size(const node& n) {
    std::size_t total = 1;
    for (const auto& c : n.children) {
        total += size(c);
    }
    return total;
}

std::size_t depth(const node& n) {
    std::size_t deepest = 0;
    for (const auto& c : n.children) {
        deepest = std::max(deepest, depth(c));
    }
    return deepest + 1;
}

namespace {

void collect(const node& n, std::size_t& next, std::vector<subtree_ref>& out) {
    out.push_back({next++, &n});
    for (const auto& c : n.children) {
        collect(c, next, out);
    }
}

// Walks to the node with pre-order id `target`; `base` is the id of `n`.
template <typename Node>
Node* find_node(Node& n, std::size_t base, std::size_t target) {
    if (base == target) {
        return &n;
    }
    std::size_t cursor = base + 1;
    for (auto& c : n.children) {
        const std::size_t span = size(c);
        if (target < cursor + span) {
            return find_node(c, cursor, target);
        }
        cursor += span;
    }
    return nullptr;
}

std::optional<std::size_t> find_parent(const node& n, std::size_t base, std::size_t target) {
    std::size_t cursor = base + 1;
    for (const auto& c : n.children) {
        const std::size_t span = size(c);
        if (target == cursor) {
            return base;
        }
        if (target < cursor + span) {
            return find_parent(c, cursor, target);
        }
        cursor += span;
    }
    return std::nullopt;
}

void check_id(const behavior_tree& t, std::size_t id) {
    if (id >= size(t)) {
        throw std::out_of_range("node id " + std::to_string(id) + " outside tree of size " + std::to_string(size(t)));
    }
}

std::optional<node> normalized(const node& n) {
    if (!n.is_control()) {
        return n;
    }
    std::vector<node> kids;
    for (const auto& c : n.children) {
        auto cleaned = normalized(c);
        if (!cleaned) {
            continue;
        }
        if (cleaned->type == n.type) {
            for (auto& grandchild : cleaned->children) {
                kids.push_back(std::move(grandchild));
            }
        } else {
            kids.push_back(std::move(*cleaned));
        }
    }
    if (kids.empty()) {
        return std::nullopt;
    }
    if (kids.size() == 1) {
        return std::move(kids.front());
    }
    return node{n.type, {}, std::move(kids)};
}

} // namespace

std::vector<subtree_ref> subtrees(const behavior_tree& t) {
    std::vector<subtree_ref> out;
    std::size_t next = 0;
    collect(t.root, next, out);
    return out;
}

const node& node_at(const behavior_tree& t, std::size_t id) {
    check_id(t, id);
    return *find_node(t.root, 0, id);
}

std::optional<std::size_t> parent_of(const behavior_tree& t, std::size_t id) {
    check_id(t, id);
    if (id == 0) {
        return std::nullopt;
    }
    return find_parent(t.root, 0, id);
}

behavior_tree replace_subtree(const behavior_tree& t, std::size_t id, node replacement) {
    check_id(t, id);
    behavior_tree out = t;
    *find_node(out.root, 0, id) = std::move(replacement);
    return out;
}

std::optional<behavior_tree> remove_subtree(const behavior_tree& t, std::size_t id) {
    check_id(t, id);
    if (id == 0) {
        return std::nullopt;
    }
    const std::size_t parent_id = *find_parent(t.root, 0, id);
    behavior_tree out = t;
    node* parent = find_node(out.root, 0, parent_id);
    std::size_t cursor = parent_id + 1;
    for (auto it = parent->children.begin(); it != parent->children.end(); ++it) {
        if (cursor == id) {
            parent->children.erase(it);
            break;
        }
        cursor += size(*it);
    }
    return out;
}

behavior_tree insert_child(const behavior_tree& t, std::size_t parent_id, std::size_t position, node child) {
    check_id(t, parent_id);
    behavior_tree out = t;
    node* parent = find_node(out.root, 0, parent_id);
    if (!parent->is_control()) {
        throw std::invalid_argument("cannot insert a child under a behavior node");
    }
    position = std::min(position, parent->children.size());
    parent->children.insert(parent->children.begin() + static_cast<std::ptrdiff_t>(position), std::move(child));
    return out;
}

std::optional<behavior_tree> normalize(const behavior_tree& t) {
    auto root = normalized(t.root);
    if (!root) {
        return std::nullopt;
    }
    return behavior_tree{std::move(*root)};
}

} // namespace kitbt
