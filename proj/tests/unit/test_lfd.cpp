#include <doctest.h>

#include <algorithm>

#include "kitbt/kitting_env.hpp"
#include "kitbt/lfd.hpp"
#include "kitbt/vocabulary.hpp"
#include "oracles.hpp"

using namespace kitbt;

namespace {

demo_command pick(const std::string& o) {
    demo_command c;
    c.type = demo_action_type::pick;
    c.object = o;
    return c;
}

demo_command place(const std::string& frame, const vec3& p) {
    demo_command c;
    c.type = demo_action_type::place;
    c.frame = frame;
    c.position = p;
    return c;
}

double max_pairwise(const std::vector<vec3>& pts) {
    double worst = 0;
    for (const auto& a : pts) {
        for (const auto& b : pts) {
            worst = std::max(worst, (a - b).norm());
        }
    }
    return worst;
}

const action_cluster& place_cluster(const std::vector<action_cluster>& cs, const std::string& object) {
    for (const auto& c : cs) {
        if (c.type == demo_action_type::place && c.object == object) {
            return c;
        }
    }
    throw std::runtime_error("no place cluster for " + object);
}

// Green on top of Yellow, with Yellow moved to a different table spot each time.
std::vector<demonstration> green_on_yellow(std::size_t n) {
    const scenario_config sc = oracle::load_scenario("exp1");
    std::vector<demonstration> out;
    const vec3 spots[] = {vec3(0.0, 0.3, 0.025), vec3(-0.05, -0.3, 0.025), vec3(0.1, 0.35, 0.025)};
    const vec3 jitter[] = {vec3(0.001, 0, 0), vec3(-0.001, 0.0005, 0), vec3(0, -0.001, 0.001)};
    for (std::size_t i = 0; i < n; ++i) {
        const world_state w = reset(sc, 10 + i);
        out.push_back(record(w, {pick("YellowBox"), place("base", spots[i]), pick("GreenBox"),
                                 place("YellowBox", vec3(0, 0, 0.05) + jitter[i])}));
    }
    return out;
}

} // namespace

TEST_CASE("recording captures every candidate frame at release time") {
    const world_state w = reset(oracle::load_scenario("exp1"), 0);
    const demonstration d = record(w, {pick("GreenBox"), place("KittingBox", vec3(0, 0, 0.025))});
    REQUIRE(d.actions.size() == 2);
    CHECK(d.actions[0].type == demo_action_type::pick);
    const demo_action& p = d.actions[1];
    CHECK(p.object == "GreenBox");
    CHECK(p.index == 1);
    std::vector<std::string> frames;
    for (const auto& [f, pos] : p.positions) {
        frames.push_back(f);
    }
    CHECK(frames == std::vector<std::string>{"BlueBox", "KittingBox", "YellowBox", "base"});
    const vec3 release = vec3(0.4, 0, 0.025);
    CHECK(p.positions.at("base").isApprox(release));
    CHECK(p.positions.at("YellowBox").isApprox(release - w.object("YellowBox").position));
    CHECK(p.positions.at("KittingBox").isApprox(vec3(0, 0, 0.025)));
    CHECK(d.final_state.object("GreenBox").supported_by == "KittingBox");
}

TEST_CASE("invalid demonstration actions") {
    const world_state w = reset(oracle::load_scenario("exp3"), 0);
    CHECK_THROWS_AS(record(w, {pick("GreenBox"), pick("BlueBox")}), invalid_action);
    CHECK_THROWS_AS(record(w, {place("base", vec3(0, 0, 0))}), invalid_action);
    CHECK_THROWS_AS(record(w, {pick("YellowBox")}), invalid_action);
    CHECK_THROWS_AS(record(w, {pick("KittingBox")}), invalid_action);
    CHECK_THROWS_AS(record(w, {pick("GreenBox"), place("Nowhere", vec3(0, 0, 0))}), invalid_action);
    CHECK_THROWS_AS(record(w, {}), invalid_action);
}

TEST_CASE("replaying a recording reproduces its final snapshot") {
    const scenario_config sc = oracle::load_scenario("exp3");
    for (const auto& d : oracle::load_demos({"exp3_unstack"}, sc)) {
        CHECK(replay(d) == d.final_state);
    }
    for (const auto& d : oracle::load_demos({"exp2_pyramid_a", "exp2_pyramid_b", "exp2_pyramid_c"},
                                            oracle::load_scenario("exp2"))) {
        CHECK(replay(d) == d.final_state);
    }
}

TEST_CASE("three demonstrations reveal the reference frame") {
    const auto demos = green_on_yellow(3);
    const auto clusters = cluster(demos);
    const action_cluster& c = place_cluster(clusters, "GreenBox");
    REQUIRE(c.members.size() == 3);
    // Brute-force dispersion in two frames.
    std::vector<vec3> in_yellow, in_base;
    for (const auto& m : c.members) {
        in_yellow.push_back(m.positions.at("YellowBox"));
        in_base.push_back(m.positions.at("base"));
    }
    const double d_yellow = max_pairwise(in_yellow), d_base = max_pairwise(in_base);
    CHECK(d_yellow < 0.005);
    CHECK(d_base > 0.05);
    CHECK(dispersion(c.members, "YellowBox") == doctest::Approx(d_yellow));
    CHECK(c.frame == "YellowBox");
    CHECK(c.dispersion == doctest::Approx(d_yellow));
    vec3 mean = vec3::Zero();
    for (const auto& p : in_yellow) {
        mean += p / 3.0;
    }
    // The representative is the mean snapped to the micrometer.
    CHECK((c.representative - mean).cwiseAbs().maxCoeff() <= 0.5e-6 + 1e-15);
}

TEST_CASE("fewer than three demonstrations fall back to the base frame") {
    const auto demos = green_on_yellow(2);
    CHECK(place_cluster(cluster(demos), "GreenBox").frame == "base");
    CHECK(place_cluster(cluster({demos[0]}), "GreenBox").frame == "base");
}

TEST_CASE("identical demonstrations tie toward the base frame") {
    const auto one = green_on_yellow(1);
    const std::vector<demonstration> same{one[0], one[0], one[0]};
    const action_cluster& c = place_cluster(cluster(same), "GreenBox");
    CHECK(c.dispersion == 0.0);
    CHECK(c.frame == "base");
}

TEST_CASE("clustering rejects contradictory action types and empty input") {
    const world_state w = reset(oracle::load_scenario("exp1"), 0);
    const demonstration a = record(w, {pick("GreenBox"), place("base", vec3(0.3, 0.3, 0.03))});
    // The first action on GreenBox is a pick in one and a place in the other.
    demonstration c = a;
    std::swap(c.actions[0].type, c.actions[1].type);
    CHECK_THROWS_AS(cluster({a, c}), inconsistent_demos);
    CHECK_THROWS_AS(cluster({}), inconsistent_demos);
}

TEST_CASE("clustering is invariant under demo order") {
    const auto demos = oracle::load_demos({"exp2_pyramid_a", "exp2_pyramid_b", "exp2_pyramid_c"},
                                          oracle::load_scenario("exp2"));
    const task_constraints ref = infer_goals(demos);
    std::vector<std::size_t> perm{0, 1, 2};
    while (std::next_permutation(perm.begin(), perm.end())) {
        const task_constraints t = infer_goals({demos[perm[0]], demos[perm[1]], demos[perm[2]]});
        REQUIRE(t.goals.size() == ref.goals.size());
        for (std::size_t i = 0; i < t.goals.size(); ++i) {
            CHECK(t.goals[i] == ref.goals[i]);
        }
        CHECK(t.order == ref.order);
        CHECK(backchain(t) == backchain(ref));
    }
}

TEST_CASE("goals from three pyramid demonstrations are the pyramid in the kit") {
    const auto demos = oracle::load_demos({"exp2_pyramid_a", "exp2_pyramid_b", "exp2_pyramid_c"},
                                          oracle::load_scenario("exp2"));
    const task_constraints t = infer_goals(demos);
    REQUIRE(t.goals.size() == 3);
    CHECK(t.goals[0].object == "YellowBox");
    CHECK(t.goals[1].object == "BlueBox");
    CHECK(t.goals[2].object == "GreenBox");
    // The kit never moves, so its frame ties with base and base wins.
    for (const auto& g : t.goals) {
        CHECK(g.frame == "base");
    }
    CHECK(t.goals[0].position.isApprox(vec3(0.4, 0, 0.025)));
    CHECK(t.goals[1].position.isApprox(vec3(0.45, 0, 0.025)));
    CHECK(t.goals[2].position.isApprox(vec3(0.425, 0, 0.075)));
    CHECK(std::find(t.order.begin(), t.order.end(), std::pair<std::string, std::string>{"YellowBox", "GreenBox"}) !=
          t.order.end());
}

TEST_CASE("a single stacking demonstration gives base-frame goals in demo order") {
    const scenario_config sc = oracle::load_scenario("exp1");
    const world_state w = reset(sc, 0);
    const demonstration d = record(w, {pick("YellowBox"), place("KittingBox", vec3(0, 0, 0.025)), pick("GreenBox"),
                                       place("YellowBox", vec3(0, 0, 0.05))});
    const task_constraints t = infer_goals({d});
    REQUIRE(t.goals.size() == 2);
    CHECK(t.goals[0].object == "YellowBox");
    CHECK(t.goals[1].object == "GreenBox");
    CHECK(t.goals[0].frame == "base");
    CHECK(t.goals[0].position.isApprox(vec3(0.4, 0, 0.025)));
    CHECK(t.goals[1].position.isApprox(d.final_state.object("GreenBox").position));
    CHECK(t.order == std::vector<std::pair<std::string, std::string>>{{"YellowBox", "GreenBox"}});
}

TEST_CASE("the unstacking demonstration gives base-frame goals") {
    const scenario_config sc = oracle::load_scenario("exp3");
    const task_constraints t = infer_goals(oracle::load_demos({"exp3_unstack"}, sc));
    // Green and Blue come off the tower; Yellow is not moved.
    REQUIRE(t.goals.size() == 2);
    for (const auto& g : t.goals) {
        CHECK(g.frame == "base");
    }
    CHECK(t.goals[0].object == "GreenBox");
    CHECK(t.goals[0].position.isApprox(vec3(0.1, 0.1, 0.025)));
    CHECK(t.goals[1].object == "BlueBox");
    CHECK(t.order == std::vector<std::pair<std::string, std::string>>{{"GreenBox", "BlueBox"}});
}

TEST_CASE("opposite orders of independent placements leave them unordered") {
    const world_state w = reset(oracle::load_scenario("exp1"), 0);
    const demonstration a = record(w, {pick("YellowBox"), place("base", vec3(0.0, 0.3, 0.025)), pick("BlueBox"),
                                       place("base", vec3(0.1, 0.3, 0.025))});
    const demonstration b = record(w, {pick("BlueBox"), place("base", vec3(0.1, 0.3, 0.025)), pick("YellowBox"),
                                       place("base", vec3(0.0, 0.3, 0.025))});
    CHECK(infer_goals({a, b}).order.empty());
    CHECK(infer_goals({a, a}).order.size() == 1);
}

TEST_CASE("one goal backchains to the pick-and-place subtree node for node") {
    task_constraints t;
    t.goals.push_back({"GreenBox", "YellowBox", vec3(0, 0, 0.05), 0.01});
    const behavior_tree tree = backchain(t);
    CHECK(serialize(tree) == oracle::fig1_tokens("GreenBox", "YellowBox", "0,0,0.05"));
    CHECK(validate(tree).empty());
}

TEST_CASE("a goal that already holds is reached without acting") {
    const scenario_config sc = oracle::load_scenario("exp1");
    world_state w = reset(sc, 2);
    task_constraints t;
    t.goals.push_back({"BlueBox", "base", w.object("BlueBox").position, 0.01});
    kitting_environment env(w);
    CHECK(run_to_completion(backchain(t), env, 10) == run_result{status::success, 1, false});
    CHECK(env.actions_executed() == 0);
}

TEST_CASE("three goals backchain to three subtrees in stacking order") {
    task_constraints t;
    t.goals.push_back({"GreenBox", "KittingBox", vec3(0, 0, 0.075), 0.01});
    t.goals.push_back({"YellowBox", "KittingBox", vec3(0, 0, 0.025), 0.01});
    t.goals.push_back({"BlueBox", "KittingBox", vec3(0, 0, 0.125), 0.01});
    t.order = {{"YellowBox", "GreenBox"}, {"GreenBox", "BlueBox"}, {"YellowBox", "BlueBox"}};
    const behavior_tree tree = backchain(t);
    REQUIRE(tree.root.type == node_type::sequence);
    REQUIRE(tree.root.children.size() == 3);
    const char* order[] = {"YellowBox", "GreenBox", "BlueBox"};
    for (int i = 0; i < 3; ++i) {
        const goal_target& g = *std::find_if(t.goals.begin(), t.goals.end(),
                                             [&](const goal_target& x) { return x.object == order[i]; });
        CHECK(tree.root.children[i] == vocab::pick_place_subtree(g.object, g.frame, g.position));
    }
    const scenario_config sc = oracle::load_scenario("exp1");
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        world_state w = reset(sc, seed);
        kitting_environment env(w);
        CHECK(run_to_completion(tree, env, default_tick_budget).final_status == status::success);
        CHECK(goal_satisfied(w, goal_spec{t.goals}));
    }
}

TEST_CASE("backchained trees solve the task from every demo's initial state") {
    struct set {
        const char* scenario;
        std::vector<std::string> demos;
    };
    for (const auto& s : {set{"exp1", {"exp1_blue_on_green"}},
                          set{"exp2", {"exp2_pyramid_a", "exp2_pyramid_b", "exp2_pyramid_c"}},
                          set{"exp3", {"exp3_unstack"}}}) {
        const auto demos = oracle::load_demos(s.demos, oracle::load_scenario(s.scenario));
        const task_constraints t = infer_goals(demos);
        const behavior_tree tree = backchain(t);
        CHECK(validate(tree).empty());
        for (const auto& d : demos) {
            world_state w = d.initial;
            kitting_environment env(w);
            const run_result r = run_to_completion(tree, env, default_tick_budget);
            INFO(s.scenario);
            CHECK(r.final_status == status::success);
            CHECK(goal_satisfied(w, goal_spec{t.goals}));
        }
    }
}

TEST_CASE("backchaining without an achieving action fails") {
    task_constraints t;
    t.goals.push_back({"GreenBox", "base", vec3(0, 0, 0.025), 0.01});
    std::vector<action_descriptor> library{{"pick", condition_kind::holding, {condition_kind::gripper_empty}}};
    CHECK_THROWS_AS(backchain(t, library), no_achieving_action);
    CHECK_THROWS_AS(backchain(task_constraints{}), std::invalid_argument);
}

TEST_CASE("a library with drop_held regresses gripper_empty") {
    task_constraints t;
    t.goals.push_back({"GreenBox", "base", vec3(0, 0, 0.025), 0.01});
    const behavior_tree tree = backchain(t, pick_place_library(true));
    CHECK(validate(tree).empty());
    const std::string text = genome_text(tree);
    CHECK(text.find("drop_held!") != std::string::npos);
}

TEST_CASE("synthetic frame inference: 100 seeded trials") {
    std::size_t correct = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const oracle::synthetic_case c = oracle::synthetic_frame_case(seed, 0.002, 0.05);
        correct += place_cluster(cluster(c.demos), c.object).frame == c.true_frame ? 1 : 0;
    }
    CHECK(correct == 100);
}
