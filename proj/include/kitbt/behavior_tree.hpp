#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kitbt {

enum class status { success, failure, running };

std::string_view to_string(status s);

enum class node_type { sequence, fallback, action, condition };

inline bool is_control(node_type t) { return t == node_type::sequence || t == node_type::fallback; }

// A behavior node carries its behavior text without the trailing '!' / '?'
// marker, e.g. "pick(GreenBox)". Control nodes leave `behavior` empty.
struct node {
    node_type type = node_type::action;
    std::string behavior;
    std::vector<node> children;

    static node sequence(std::vector<node> children);
    static node fallback(std::vector<node> children);
    static node action(std::string behavior);
    static node condition(std::string behavior);

    bool is_control() const { return kitbt::is_control(type); }

    friend bool operator==(const node&, const node&) = default;
};

// Immutable value once built; node ids are pre-order indices (root = 0).
struct behavior_tree {
    node root;

    friend bool operator==(const behavior_tree&, const behavior_tree&) = default;
};

class unknown_behavior : public std::runtime_error {
public:
    explicit unknown_behavior(const std::string& id)
        : std::runtime_error("unknown behavior: " + id), behavior_id(id) {}
    std::string behavior_id;
};

// ---- metrics and structural editing ------------------------------------

std::size_t size(const node& n);
inline std::size_t size(const behavior_tree& t) { return size(t.root); }
std::size_t depth(const node& n);
inline std::size_t depth(const behavior_tree& t) { return depth(t.root); }

struct subtree_ref {
    std::size_t id;
    const node* subtree;
};

/// Every node in pre-order, each usable as a crossover cut point.
std::vector<subtree_ref> subtrees(const behavior_tree& t);

const node& node_at(const behavior_tree& t, std::size_t id);

/// Pre-order id of the parent of `id`, or nullopt for the root.
std::optional<std::size_t> parent_of(const behavior_tree& t, std::size_t id);

behavior_tree replace_subtree(const behavior_tree& t, std::size_t id, node replacement);
/// Removes the subtree at `id`. Removing the root yields nullopt.
std::optional<behavior_tree> remove_subtree(const behavior_tree& t, std::size_t id);
/// Inserts `child` as child number `position` of the control node `parent_id`.
behavior_tree insert_child(const behavior_tree& t, std::size_t parent_id, std::size_t position, node child);

/// Semantics-preserving cleanup: drops childless control nodes, collapses
/// single-child control nodes into their child and splices a control child
/// into a parent of the same type. Returns nullopt when nothing is left.
std::optional<behavior_tree> normalize(const behavior_tree& t);

// ---- genome --------------------------------------------------------------

using genome = std::vector<std::string>;

class genome_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class empty_genome : public genome_error {
public:
    empty_genome() : genome_error("empty genome") {}
};
class unbalanced_genome : public genome_error {
public:
    explicit unbalanced_genome(const std::string& what) : genome_error("unbalanced genome: " + what) {}
};

std::string token_of(const node& behavior_node);

genome serialize(const behavior_tree& t);
behavior_tree deserialize(const genome& g);

/// Whitespace-separated text form of a genome.
std::string to_text(const genome& g);
genome genome_from_text(std::string_view text);

inline std::string genome_text(const behavior_tree& t) { return to_text(serialize(t)); }
inline behavior_tree parse_tree(std::string_view text) { return deserialize(genome_from_text(text)); }

// ---- structural constraints ---------------------------------------------

enum class violation_kind {
    same_control_on_consecutive_levels,
    condition_as_last_child,
    childless_control,
    identical_adjacent_nodes,
};

std::string_view to_string(violation_kind k);

struct constraint_violation {
    violation_kind kind;
    std::size_t node_id;

    friend bool operator==(const constraint_violation&, const constraint_violation&) = default;
};

/// Reports every breach of the four structural constraints. Never throws.
std::vector<constraint_violation> validate(const behavior_tree& t);
inline bool is_valid(const behavior_tree& t) { return validate(t).empty(); }

// ---- execution -------------------------------------------------------------

/// Provides behavior implementations keyed by behavior text.
class execution_environment {
public:
    virtual ~execution_environment() = default;
    /// Executes an action or evaluates a condition. Throws unknown_behavior.
    virtual status execute(const node& behavior_node) = 0;
    /// Called once before every tick of the root.
    virtual void begin_tick() {}
};

using tick_observer = std::function<void(std::size_t node_id, status result)>;

status tick(const behavior_tree& t, execution_environment& env, const tick_observer& observer = {});
/// Ticks a subtree without starting a new root tick (composite behaviors).
status tick_subtree(const node& n, execution_environment& env);

struct run_result {
    status final_status = status::failure;
    std::size_t ticks = 0;
    bool timed_out = false;

    friend bool operator==(const run_result&, const run_result&) = default;
};

inline constexpr std::size_t default_tick_budget = 300;

run_result run_to_completion(const behavior_tree& t, execution_environment& env, std::size_t max_ticks,
                             const tick_observer& observer = {});

} // namespace kitbt
