#include <cmath>
#include <stdexcept>

#include "kitbt/gp.hpp"

namespace kitbt {

void fitness_params::check() const {
    for (double w : {length_penalty, timeout_penalty, failure_penalty}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("fitness weights must be finite and non-negative");
        }
    }
    for (const auto& sg : subgoals) {
        if (!std::isfinite(sg.bonus)) {
            throw std::invalid_argument("subgoal bonus must be finite");
        }
    }
}

std::string_view to_string(length_metric m) { return m == length_metric::expanded ? "expanded" : "nodes"; }

length_metric length_metric_from_string(std::string_view s) {
    if (s == "expanded") {
        return length_metric::expanded;
    }
    if (s == "nodes") {
        return length_metric::nodes;
    }
    throw std::invalid_argument("unknown length metric '" + std::string(s) + "'");
}

double score(const fitness_terms& terms, const fitness_params& params) {
    double f = -terms.distance_mm;
    f -= params.length_penalty * static_cast<double>(terms.length);
    if (terms.timed_out) {
        f -= params.timeout_penalty;
    }
    if (terms.failed) {
        f -= params.failure_penalty;
    }
    return f + terms.bonus;
}

fitness_terms fitness_terms_for(const world_state& after_run, const goal_spec& goal, std::size_t length,
                                const run_result& run, double bonus) {
    fitness_terms t;
    t.distance_mm = goal_distance_mm(after_run, goal);
    t.length = length;
    t.timed_out = run.timed_out;
    t.failed = run.final_status == status::failure;
    t.bonus = bonus;
    return t;
}

double fitness(const world_state& after_run, const goal_spec& goal, const behavior_tree& tree, const run_result& run,
               const fitness_params& params) {
    return score(fitness_terms_for(after_run, goal, size(tree), run), params);
}

} // namespace kitbt
