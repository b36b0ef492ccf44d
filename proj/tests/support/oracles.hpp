#pragma once

// Reference implementations written independently of the library, used to
// check it: brute-force validators, explicit geometry, hand-built trees.

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kitbt/behavior_tree.hpp"
#include "kitbt/experiment.hpp"
#include "kitbt/gp.hpp"
#include "kitbt/lfd.hpp"
#include "kitbt/scenario.hpp"

namespace oracle {

std::filesystem::path data_path(const std::string& relative);
kitbt::scenario_config load_scenario(const std::string& name);
kitbt::experiment_config load_experiment(const std::string& name);
std::vector<kitbt::demonstration> load_demos(const std::vector<std::string>& names,
                                             const kitbt::scenario_config& scenario);

// Per-node (kind, pre-order id) records found by walking a flat pre-order
// table and checking each rule separately.
std::vector<std::pair<kitbt::violation_kind, std::size_t>> brute_force_violations(const kitbt::behavior_tree& t);
std::vector<std::pair<kitbt::violation_kind, std::size_t>> sorted(const std::vector<kitbt::constraint_violation>& v);

// Arbitrary trees (not necessarily valid) over a small alphabet so that
// duplicates and same-type nesting occur often.
kitbt::node random_any_node(std::mt19937_64& rng, std::size_t max_depth, std::size_t alphabet = 3);

// The pick-and-place subtree assembled from its literal token list.
kitbt::genome fig1_tokens(const std::string& object, const std::string& frame, const std::string& position);

// Hand-written solution for the two-box stack in the kit.
kitbt::behavior_tree exp1_solution();

// Area fraction of square `a` (side sa, center ax, ay) covered by square `b`.
double footprint_fraction(double ax, double ay, double sa, double bx, double by, double sb);

// Sum of centroid distances in mm with frames resolved by hand.
double goal_distance_mm(const kitbt::world_state& s, const kitbt::goal_spec& g);

// Scripted environment: each behavior text maps to a status sequence, the
// last entry repeating. Unlisted behaviors fail. Every execution is logged.
class script_env : public kitbt::execution_environment {
public:
    std::map<std::string, std::vector<kitbt::status>> script;
    std::vector<std::string> log;
    std::size_t ticks = 0;

    kitbt::status execute(const kitbt::node& n) override;
    void begin_tick() override { ++ticks; }

private:
    std::map<std::string, std::size_t> calls_;
};

// Synthetic demonstrations where the true frame is known: one object is
// placed at a fixed offset from `anchor` with Gaussian noise, while the other
// (distractor) boxes are scattered with at least `spread` between
// demonstrations.
struct synthetic_case {
    std::vector<kitbt::demonstration> demos;
    std::string object;
    std::string true_frame;
};
synthetic_case synthetic_frame_case(std::uint64_t seed, double sigma, double spread, std::size_t n_demos = 3);

// Breadth-first closure of the initial world under every pick-and-place gene
// of the pool, up to `depth` genes. Reports the smallest distance of
// `object` to `target` seen and whether every reached box centroid stayed
// on the horizontal lattice of pitch `pitch`.
struct closure_result {
    double min_distance_m = 1e9;
    bool on_lattice = true;
    std::size_t states = 0;
};
closure_result pool_closure(const kitbt::scenario_config& scenario, std::uint64_t seed,
                            const kitbt::goal_target& target, std::size_t depth);

} // namespace oracle
