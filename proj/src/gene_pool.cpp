#include "kitbt/gene_pool.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>

namespace kitbt {

namespace {

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

behavior_template pick_place_gene(const std::string& object, const std::string& frame, const vec3& position,
                                  std::string label) {
    behavior_template t;
    t.behavior_id = vocab::pickplace_text(object, frame, position);
    t.kind = behavior_kind::action;
    t.object = object;
    t.frame = frame;
    t.position = position;
    t.position_label = std::move(label);
    t.postconditions = {vocab::at_text(object, frame, position)};
    t.expansion = serialize(behavior_tree{vocab::pick_place_subtree(object, frame, position)});
    return t;
}

behavior_template gripper_behavior(const std::string& token) {
    if (token.size() < 2 || (token.back() != '!' && token.back() != '?')) {
        throw std::invalid_argument("gripper behavior needs a '!' or '?' marker: " + token);
    }
    behavior_template t;
    t.behavior_id = token.substr(0, token.size() - 1);
    t.kind = token.back() == '!' ? behavior_kind::action : behavior_kind::condition;
    if (t.behavior_id == vocab::open) {
        t.postconditions = {std::string(vocab::gripper_empty)};
    } else if (t.behavior_id == vocab::drop_held) {
        t.preconditions = {std::string(vocab::holding_any)};
        t.postconditions = {std::string(vocab::gripper_empty)};
    } else if (t.behavior_id == vocab::close) {
        t.preconditions = {std::string(vocab::holding_any)};
    }
    return t;
}

} // namespace

std::string_view to_string(condition_kind k) {
    switch (k) {
        case condition_kind::object_at:
            return vocab::at;
        case condition_kind::holding:
            return vocab::holding;
        case condition_kind::gripper_empty:
            return vocab::gripper_empty;
    }
    return "?";
}

std::vector<action_descriptor> pick_place_library(bool with_drop_held) {
    std::vector<action_descriptor> lib{
        {std::string(vocab::place), condition_kind::object_at, {condition_kind::holding}},
        {std::string(vocab::pick), condition_kind::holding, {condition_kind::gripper_empty}},
    };
    if (with_drop_held) {
        lib.push_back({std::string(vocab::drop_held), condition_kind::gripper_empty, {}});
    }
    return lib;
}

node behavior_template::as_node() const {
    return kind == behavior_kind::action ? node::action(behavior_id) : node::condition(behavior_id);
}

gene_pool::gene_pool(std::vector<behavior_template> behaviors) : behaviors_(std::move(behaviors)) {
    std::string listing;
    for (std::size_t i = 0; i < behaviors_.size(); ++i) {
        const auto& b = behaviors_[i];
        if (!index_.emplace(b.behavior_id, i).second) {
            throw std::invalid_argument("duplicate behavior id " + b.behavior_id);
        }
        listing += token_of(b.as_node());
        listing.push_back('\n');
    }
    id_ = "pool-" + fnv1a_hex(listing);
}

const behavior_template* gene_pool::find(std::string_view behavior_id) const {
    auto it = index_.find(std::string(behavior_id));
    return it == index_.end() ? nullptr : &behaviors_[it->second];
}

genome gene_pool::expand(std::string_view behavior_id) const {
    const behavior_template* b = find(behavior_id);
    if (b == nullptr) {
        throw unknown_behavior(std::string(behavior_id));
    }
    if (b->composite()) {
        return b->expansion;
    }
    return {token_of(b->as_node())};
}

namespace {

std::size_t expanded_count(const gene_pool& pool, const node& n) {
    if (!n.is_control()) {
        const behavior_template* b = pool.find(n.behavior);
        if (b != nullptr && b->composite()) {
            // Every token is a node except the close tokens.
            return b->expansion.size() -
                   static_cast<std::size_t>(std::count(b->expansion.begin(), b->expansion.end(), ")"));
        }
        return 1;
    }
    std::size_t total = 1;
    for (const auto& c : n.children) {
        total += expanded_count(pool, c);
    }
    return total;
}

node expanded_node(const gene_pool& pool, const node& n) {
    if (!n.is_control()) {
        const behavior_template* b = pool.find(n.behavior);
        if (b != nullptr && b->composite()) {
            return deserialize(b->expansion).root;
        }
        return n;
    }
    node out{n.type, {}, {}};
    for (const auto& c : n.children) {
        out.children.push_back(expanded_node(pool, c));
    }
    return out;
}

} // namespace

std::size_t gene_pool::expanded_size(const behavior_tree& t) const { return expanded_count(*this, t.root); }

behavior_tree gene_pool::expand_all(const behavior_tree& t) const { return behavior_tree{expanded_node(*this, t.root)}; }

gene_pool generate_pool(const scenario_config& scenario, const pool_config& config) {
    if (scenario.boxes.empty()) {
        throw empty_scenario();
    }
    std::vector<behavior_template> out;
    for (const auto& box : scenario.boxes) {
        for (const auto& reference : scenario.boxes) {
            if (reference.name == box.name) {
                continue;
            }
            for (const auto& rel : config.relative_positions) {
                out.push_back(
                    pick_place_gene(box.name, reference.name, rel.offset_in_sides * reference.size, rel.label));
            }
        }
        if (scenario.kit && config.kit_grid > 0) {
            const double pitch = scenario.kit_pitch();
            const int half = config.kit_grid / 2;
            for (int row = 0; row < config.kit_grid; ++row) {
                for (int col = 0; col < config.kit_grid; ++col) {
                    const double x = static_cast<double>(col - half) * pitch;
                    const double y = static_cast<double>(half - row) * pitch;
                    out.push_back(pick_place_gene(box.name, scenario.kit->name, vec3(x, y, box.size / 2.0),
                                                  "kit_cell_" + std::to_string(row * config.kit_grid + col)));
                }
            }
        }
    }
    for (const auto& g : config.gripper_behaviors) {
        out.push_back(gripper_behavior(g));
    }
    return gene_pool(std::move(out));
}

} // namespace kitbt
