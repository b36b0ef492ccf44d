#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "kitbt/gp.hpp"

namespace kitbt {

namespace {

bool coin(rng_engine& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::size_t draw_index(rng_engine& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

node random_gene(const gene_pool& pool, rng_engine& rng) {
    return pool.behaviors()[draw_index(rng, pool.count())].as_node();
}

node random_control(rng_engine& rng, node a, node b) {
    if (coin(rng, 0.5)) {
        std::swap(a, b);
    }
    return coin(rng, 0.5) ? node::sequence({std::move(a), std::move(b)})
                          : node::fallback({std::move(a), std::move(b)});
}

std::vector<std::size_t> control_ids(const behavior_tree& t) {
    std::vector<std::size_t> out;
    for (const auto& s : subtrees(t)) {
        if (s.subtree->is_control()) {
            out.push_back(s.id);
        }
    }
    return out;
}

// Insertion at a uniformly drawn (control node, child slot) pair; a tree
// without control nodes gets a fresh control root around both parts.
behavior_tree insert_at_random(const behavior_tree& t, node donated, rng_engine& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t id : control_ids(t)) {
        const std::size_t n = node_at(t, id).children.size();
        for (std::size_t pos = 0; pos <= n; ++pos) {
            slots.emplace_back(id, pos);
        }
    }
    if (slots.empty()) {
        return behavior_tree{random_control(rng, t.root, std::move(donated))};
    }
    const auto [id, pos] = slots[draw_index(rng, slots.size())];
    return insert_child(t, id, pos, std::move(donated));
}

behavior_tree insert_first_child(const behavior_tree& t, node donated) {
    if (!t.root.is_control()) {
        return behavior_tree{node::sequence({std::move(donated), t.root})};
    }
    return insert_child(t, 0, 0, std::move(donated));
}

std::optional<behavior_tree> repaired(const behavior_tree& t) {
    auto n = normalize(t);
    if (n && is_valid(*n)) {
        return n;
    }
    return std::nullopt;
}

enum class mutation_op { add, remove, change };

mutation_op draw_op(const mutation_probabilities& p, rng_engine& rng) {
    std::discrete_distribution<int> d({p.add, p.remove, p.change});
    return static_cast<mutation_op>(d(rng));
}

std::optional<behavior_tree> apply_add(const behavior_tree& t, const gene_pool& pool, const gp_config& cfg,
                                       rng_engine& rng) {
    if (coin(rng, cfg.control_node_probability)) {
        const std::size_t id = draw_index(rng, size(t));
        node wrapped = random_control(rng, node_at(t, id), random_gene(pool, rng));
        return replace_subtree(t, id, std::move(wrapped));
    }
    return insert_at_random(t, random_gene(pool, rng), rng);
}

std::optional<behavior_tree> apply_remove(const behavior_tree& t, rng_engine& rng) {
    const std::size_t n = size(t);
    if (n < 2) {
        return std::nullopt;
    }
    return remove_subtree(t, 1 + draw_index(rng, n - 1));
}

std::optional<behavior_tree> apply_change(const behavior_tree& t, const gene_pool& pool, const gp_config& cfg,
                                          rng_engine& rng) {
    const std::size_t id = draw_index(rng, size(t));
    const node& target = node_at(t, id);
    if (coin(rng, cfg.control_node_probability)) {
        if (target.is_control()) {
            node toggled = target;
            toggled.type = target.type == node_type::sequence ? node_type::fallback : node_type::sequence;
            return replace_subtree(t, id, std::move(toggled));
        }
        return replace_subtree(t, id, random_control(rng, target, random_gene(pool, rng)));
    }
    node gene = random_gene(pool, rng);
    for (int redraw = 0; redraw < 8 && gene == target && pool.count() > 1; ++redraw) {
        gene = random_gene(pool, rng);
    }
    return replace_subtree(t, id, std::move(gene));
}

} // namespace

behavior_tree random_tree(const gene_pool& pool, const gp_config& cfg, rng_engine& rng) {
    if (pool.count() == 0) {
        throw std::invalid_argument("random_tree needs a non-empty gene pool");
    }
    for (std::size_t attempt = 0;; ++attempt) {
        const std::size_t n =
            std::uniform_int_distribution<std::size_t>(cfg.initial_genes_min, cfg.initial_genes_max)(rng);
        std::vector<node> genes;
        for (std::size_t i = 0; i < n; ++i) {
            genes.push_back(random_gene(pool, rng));
        }
        node root = coin(rng, 0.5) ? node::sequence(std::move(genes)) : node::fallback(std::move(genes));
        if (auto t = repaired(behavior_tree{std::move(root)})) {
            return *t;
        }
        if (attempt + 1 >= cfg.max_repair_attempts) {
            // A single action gene is always valid.
            for (const auto& b : pool.behaviors()) {
                if (b.kind == behavior_kind::action) {
                    return behavior_tree{b.as_node()};
                }
            }
            return behavior_tree{pool.behaviors().front().as_node()};
        }
    }
}

behavior_tree mutate(const behavior_tree& parent, const gene_pool& pool, const gp_config& cfg, rng_engine& rng,
                     mutation_counts* counts) {
    if (pool.count() == 0) {
        throw std::invalid_argument("mutate needs a non-empty gene pool");
    }
    for (std::size_t attempt = 0; attempt < cfg.max_repair_attempts; ++attempt) {
        const std::size_t k =
            std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, cfg.max_mutations_per_individual))(rng);
        std::optional<behavior_tree> t = parent;
        for (std::size_t i = 0; i < k && t; ++i) {
            const mutation_op op = draw_op(cfg.mutation, rng);
            std::optional<behavior_tree> next;
            switch (op) {
                case mutation_op::add:
                    if (counts) ++counts->add;
                    next = apply_add(*t, pool, cfg, rng);
                    break;
                case mutation_op::remove:
                    if (counts) ++counts->remove;
                    next = apply_remove(*t, rng);
                    break;
                case mutation_op::change:
                    if (counts) ++counts->change;
                    next = apply_change(*t, pool, cfg, rng);
                    break;
            }
            t = next ? normalize(*next) : std::nullopt;
        }
        if (t && is_valid(*t)) {
            return *t;
        }
    }
    return parent;
}

std::pair<behavior_tree, behavior_tree> crossover(const behavior_tree& a, const behavior_tree& b, rng_engine& rng,
                                                  const crossover_options& options) {
    const auto cuts_a = subtrees(a);
    const auto cuts_b = subtrees(b);
    std::optional<behavior_tree> child_a;
    std::optional<behavior_tree> child_b;
    if (options.mode == crossover_mode::swap && !options.insert_b_as_first_child) {
        for (std::size_t attempt = 0; attempt < options.max_repair_attempts && !(child_a && child_b); ++attempt) {
            const auto& ca = cuts_a[draw_index(rng, cuts_a.size())];
            const auto& cb = cuts_b[draw_index(rng, cuts_b.size())];
            if (!child_a) {
                child_a = repaired(replace_subtree(a, ca.id, *cb.subtree));
            }
            if (!child_b) {
                child_b = repaired(replace_subtree(b, cb.id, *ca.subtree));
            }
        }
        return {child_a ? *child_a : a, child_b ? *child_b : b};
    }
    for (std::size_t attempt = 0; attempt < options.max_repair_attempts && !(child_a && child_b); ++attempt) {
        if (!child_a) {
            if (options.insert_b_as_first_child) {
                child_a = repaired(insert_first_child(a, b.root));
                if (!child_a) {
                    // The hinted insertion is deterministic; resampling cannot help.
                    child_a = a;
                }
            } else {
                const node& donated = *cuts_b[draw_index(rng, cuts_b.size())].subtree;
                child_a = repaired(insert_at_random(a, donated, rng));
            }
        }
        if (!child_b) {
            const node& donated = *cuts_a[draw_index(rng, cuts_a.size())].subtree;
            child_b = repaired(insert_at_random(b, donated, rng));
        }
    }
    return {child_a ? *child_a : a, child_b ? *child_b : b};
}

std::vector<std::size_t> tournament_select(const std::vector<double>& fitness, std::size_t n_survivors,
                                           rng_engine& rng) {
    if (n_survivors > fitness.size()) {
        throw std::invalid_argument("tournament_select: more survivors than candidates");
    }
    std::vector<std::size_t> alive(fitness.size());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    if (alive.size() > n_survivors) {
        // The worst individual is always discarded, whoever it would have met.
        const double worst = *std::min_element(fitness.begin(), fitness.end());
        std::vector<std::size_t> tied;
        for (std::size_t i = 0; i < fitness.size(); ++i) {
            if (fitness[i] == worst) {
                tied.push_back(i);
            }
        }
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(tied[draw_index(rng, tied.size())]));
    }
    while (alive.size() > n_survivors) {
        const std::size_t i = draw_index(rng, alive.size());
        std::size_t j = draw_index(rng, alive.size() - 1);
        if (j >= i) {
            ++j;
        }
        const double fi = fitness[alive[i]];
        const double fj = fitness[alive[j]];
        const bool i_loses = fi < fj || (fi == fj && coin(rng, 0.5));
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(i_loses ? i : j));
    }
    return alive;
}

} // namespace kitbt
