#include <doctest.h>

#include <filesystem>

#include "kitbt/experiment.hpp"
#include "kitbt/serialization.hpp"
#include "oracles.hpp"

using namespace kitbt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kitbt_experiment_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

experiment_run fake_run(std::vector<double> best, std::vector<double> mean, std::vector<bool> solved) {
    experiment_run r;
    for (std::size_t g = 0; g < best.size(); ++g) {
        r.history.push_back({g, best[g], mean[g], "open!", g * 10, solved[g]});
    }
    return r;
}

} // namespace

TEST_CASE("seed lists") {
    CHECK(parse_seed_list("3") == std::vector<std::uint64_t>{0, 1, 2});
    CHECK(parse_seed_list("0,3,7") == std::vector<std::uint64_t>{0, 3, 7});
    CHECK(parse_seed_list("5,") == std::vector<std::uint64_t>{5});
    for (const char* bad : {"", "0", "x", "1,,2", "-1", "2,a"}) {
        CHECK_THROWS_AS(parse_seed_list(bad), std::invalid_argument);
    }
}

TEST_CASE("shipped experiment scripts load") {
    const experiment_config e1 = oracle::load_experiment("exp1");
    CHECK(e1.name == "exp1");
    REQUIRE(e1.phases.size() == 3);
    CHECK(e1.phases[0].generations == 50);
    CHECK(e1.phases[1].what == experiment_phase::kind::demo);
    CHECK(e1.phases[1].options.goal == goal_mode::extend);
    CHECK(e1.phases[1].options.use_baseline);
    CHECK(e1.total_generations() == 100);
    CHECK(e1.scenario == oracle::load_scenario("exp1"));

    CHECK_FALSE(oracle::load_experiment("exp1_control").phases[1].options.use_baseline);

    const experiment_config e3 = oracle::load_experiment("exp3");
    CHECK(e3.gp.population_size == 32);
    CHECK(e3.total_generations() == 300);
    const demo_options& o = e3.phases[1].options;
    CHECK(o.goal == goal_mode::keep);
    CHECK(o.first_child_hint);
    CHECK(o.fresh_start);
    REQUIRE(o.subgoal_bonus.has_value());
    CHECK(*o.subgoal_bonus == 100.0);

    CHECK(oracle::load_experiment("exp2").phases[1].demo_files.size() == 3);
}

TEST_CASE("script errors name the file, line and field") {
    const fs::path dir = temp_dir("errors");
    fs::copy_file(oracle::data_path("scenarios/exp1.json"), dir / "exp1.json");
    const fs::path file = dir / "bad.json";
    auto error_of = [&](const std::string& text) -> format_error {
        write_text_file(file, text);
        try {
            load_experiment(file);
        } catch (const format_error& e) {
            return e;
        }
        FAIL("expected a format_error for " << text);
        throw std::logic_error("unreachable");
    };

    format_error e = error_of("{\n \"scenario\": \"exp1.json\",\n \"phases\": [\n  {\"evolve\": 5},\n"
                              "  {\"demo\": {\"files\": [\"missing.json\"]}}\n ]\n}\n");
    CHECK(e.field == "/phases/1/demo/files/0");
    CHECK(e.source == file.string());
    CHECK(e.line == 5);

    e = error_of("{\"scenario\": \"exp1.json\", \"phases\": [{\"evolve\": 0}]}");
    CHECK(e.field == "/phases/0/evolve");
    e = error_of("{\"scenario\": \"exp1.json\", \"phases\": [{\"evolve\": 2, \"demo\": {}}]}");
    CHECK(e.field == "/phases/0");
    e = error_of("{\"scenario\": \"exp1.json\", \"phases\": []}");
    CHECK(e.field == "/phases");
    e = error_of("{\"scenario\": \"nowhere.json\", \"phases\": [{\"evolve\": 1}]}");
    CHECK(e.field == "/scenario");
    e = error_of("{\"scenario\": \"exp1.json\", \"phases\": [{\"evolve\": 1}], \"gp\": {\"seed\": -4}}");
    CHECK(e.field == "/gp/seed");
    e = error_of("{\"scenario\": \"exp1.json\", \"phase\": [{\"evolve\": 1}]}");
    CHECK(e.field == "/phase");
}

TEST_CASE("aggregates are means, medians and solved fractions per generation") {
    const std::vector<experiment_run> runs{fake_run({-300, -100}, {-500, -400}, {false, true}),
                                           fake_run({-200, -130}, {-450, -420}, {false, false}),
                                           fake_run({-260, -90}, {-470, -300}, {false, true}),
                                           fake_run({-240, -70}, {-430, -350}, {true, true})};
    const auto rows = aggregate(runs);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].generation == 0);
    CHECK(rows[0].mean_best == doctest::Approx(-250.0));
    CHECK(rows[0].median_best == doctest::Approx(-250.0)); // (-260 + -240) / 2
    CHECK(rows[0].mean_mean == doctest::Approx(-462.5));
    CHECK(rows[0].median_mean == doctest::Approx(-460.0));
    CHECK(rows[0].solved_fraction == 0.25);
    CHECK(rows[1].mean_best == doctest::Approx(-97.5));
    CHECK(rows[1].median_best == doctest::Approx(-95.0));
    CHECK(rows[1].solved_fraction == 0.75);

    const std::vector<experiment_run> odd{runs[0], runs[1], runs[2]};
    CHECK(aggregate(odd)[0].median_best == -260.0);

    const std::string csv = aggregate_csv(rows);
    CHECK(csv.rfind("generation,mean_best_fitness,median_best_fitness,mean_mean_fitness,median_mean_fitness,solved_fraction\n", 0) == 0);
    CHECK(csv.find("\n1,-97.500000,-95.000000,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    CHECK(aggregate({}).empty());
    CHECK_THROWS_AS(aggregate({runs[0], fake_run({-1}, {-1}, {false})}), std::invalid_argument);
}

TEST_CASE("a run walks the phases through one session") {
    experiment_config c = oracle::load_experiment("exp1");
    c.phases[0].generations = 6;
    c.phases[2].generations = 4;
    const experiment_run r = run_experiment(c, 2);
    CHECK(r.seed == 2);
    REQUIRE(r.phases.size() == 3);
    CHECK(r.phases[0].end_generation == 6);
    CHECK_FALSE(r.phases[0].demo.has_value());
    REQUIRE(r.phases[1].demo.has_value());
    CHECK(r.phases[1].end_generation == 6);
    CHECK(r.phases[2].end_generation == 10);
    CHECK(r.history.size() == 11);
    CHECK(r.final_goal.targets.size() == 3);
    CHECK(r.pool_id == generate_pool(c.scenario).id());
    CHECK(r.best.genome == r.history.back().best_genome);

    // The same steps driven by hand.
    session_config sc;
    sc.scenario = c.scenario;
    sc.scenario_seed = 2;
    sc.gp.seed = 2;
    session s("manual", sc);
    s.start_gp(6);
    s.wait_settled();
    s.add_demonstrations(oracle::load_demos({"exp1_blue_on_green"}, c.scenario), c.phases[1].options);
    s.start_gp(4);
    s.wait_settled();
    CHECK(s.history() == r.history);

    CHECK(run_experiment(c, 2, 3).history == r.history);
    c.scenario_seed = 5;
    CHECK_FALSE(run_experiment(c, 2).history == r.history);
}
