#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "kitbt/serialization.hpp"
#include "oracles.hpp"

using namespace kitbt;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kitbt_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct cli_result {
    int code = -1;
    std::string out;
};

// Runs the command line tool with `args`, capturing stdout and stderr.
cli_result cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "kitbt_cli_output.txt";
    const std::string cmd = std::string("'") + KITBT_CLI_PATH + "' " + args + " >'" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    cli_result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text_file(log);
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string data(const std::string& rel) { return q(oracle::data_path(rel)); }

} // namespace

TEST_CASE("usage errors exit with 2 and help with 0") {
    CHECK(cli("").code == 2);
    CHECK(cli("fly").code == 2);
    CHECK(cli("run --config " + data("experiments/exp1.json")).code == 2); // --out is required
    const cli_result help = cli("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("replay") != std::string::npos);
}

TEST_CASE("a solved experiment exits 0 and its champion replays to the goal") {
    const fs::path out = temp_dir("solved");
    const cli_result r = cli("run --config " + data("experiments/exp1.json") + " --seeds 1,3 --out " + q(out));
    INFO(r.out);
    REQUIRE(r.code == 0);
    for (const char* f : {"aggregate.csv", "summary.json", "seed_1/run.jsonl", "seed_1/best_tree.json", "seed_3/run.jsonl"}) {
        CHECK(fs::exists(out / f));
    }
    const json summary = read_json_file(out / "summary.json");
    REQUIRE(summary["runs"].size() == 2);
    CHECK(summary["runs"][0]["solved"] == true);
    CHECK(summary["runs"][0]["final_goal"].size() == 3);
    CHECK(summary["runs"][0]["phases"][1]["baseline"].is_string());

    const std::string log = read_text_file(out / "seed_1" / "run.jsonl");
    CHECK(std::count(log.begin(), log.end(), '\n') == 101);

    const fs::path trace = out / "trace.json";
    const cli_result replay = cli("replay --tree " + q(out / "seed_1" / "best_tree.json") + " --scenario " +
                                  data("scenarios/exp1.json") + " --seed 1 --trace " + q(trace));
    INFO(replay.out);
    CHECK(replay.code == 0);
    CHECK(replay.out.find("goal distance 0.000 mm") != std::string::npos);
    CHECK(replay.out.find("verdict solved") != std::string::npos);
    CHECK(read_json_file(trace)["solved"] == true);
}

TEST_CASE("an unsolved run exits 1") {
    const fs::path out = temp_dir("unsolved");
    const cli_result r = cli("run --config " + data("experiments/exp1.json") + " --seeds 0,1 --out " + q(out));
    INFO(r.out);
    CHECK(r.code == 1);
    CHECK(read_json_file(out / "summary.json")["runs"][0]["solved"] == false);

    // A do-nothing tree replays without reaching the goal.
    const fs::path tree = out / "idle.json";
    write_json_file_atomic(tree, tree_file(parse_tree("open!"), generate_pool(oracle::load_scenario("exp3")).id()));
    const cli_result replay = cli("replay --tree " + q(tree) + " --scenario " + data("scenarios/exp3.json"));
    CHECK(replay.code == 1);
    CHECK(replay.out.find("verdict unsolved") != std::string::npos);
}

TEST_CASE("unusable inputs exit 2 with the offending field") {
    const fs::path dir = temp_dir("inputs");
    const fs::path tree = dir / "corrupt.json";
    write_text_file(tree, "{\"format_version\": 1, \"genome\": \"s( open!\", \"pool_id\": \"x\"}\n");
    cli_result r = cli("replay --tree " + q(tree) + " --scenario " + data("scenarios/exp1.json"));
    CHECK(r.code == 2);
    CHECK(r.out.find("/genome") != std::string::npos);

    write_json_file_atomic(tree, tree_file(oracle::exp1_solution(), "pool-other"));
    r = cli("replay --tree " + q(tree) + " --scenario " + data("scenarios/exp1.json"));
    CHECK(r.code == 2);
    CHECK(r.out.find("/pool_id") != std::string::npos);

    fs::copy_file(oracle::data_path("scenarios/exp1.json"), dir / "exp1.json");
    const fs::path config = dir / "missing_demo.json";
    write_text_file(config, "{\"scenario\": \"exp1.json\", \"phases\": [{\"evolve\": 1}, {\"demo\": {\"files\": [\"gone.json\"]}}]}");
    r = cli("run --config " + q(config) + " --seeds 1 --out " + q(dir / "out"));
    CHECK(r.code == 2);
    CHECK(r.out.find("/phases/1/demo/files/0") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));

    r = cli("run --config " + data("experiments/exp1.json") + " --seeds x --out " + q(dir / "out"));
    CHECK(r.code == 2);
    r = cli("run --config " + data("experiments/exp1.json") + " --seeds 2 --jobs 0 --out " + q(dir / "out"));
    CHECK(r.code == 2);
}

TEST_CASE("run output is byte-identical across repeats and job counts") {
    const fs::path a = temp_dir("repeat_a"), b = temp_dir("repeat_b"), c = temp_dir("repeat_c");
    const std::string base = "run --config " + data("experiments/exp2.json") + " --seeds 0,4,5 --out ";
    REQUIRE(cli(base + q(a) + " --jobs 1").code <= 1);
    REQUIRE(cli(base + q(b) + " --jobs 1").code <= 1);
    REQUIRE(cli(base + q(c) + " --jobs 3").code <= 1);
    for (const char* f : {"aggregate.csv", "summary.json", "seed_0/run.jsonl", "seed_4/run.jsonl", "seed_5/run.jsonl",
                          "seed_5/best_tree.json"}) {
        INFO(f);
        CHECK(read_text_file(a / f) == read_text_file(b / f));
        CHECK(read_text_file(a / f) == read_text_file(c / f));
    }
}

TEST_CASE("pool and record print their documents") {
    const cli_result pool = cli("pool --scenario " + data("scenarios/exp1.json"));
    REQUIRE(pool.code == 0);
    const json manifest = parse_json(pool.out);
    CHECK(manifest["count"] == 62);
    CHECK(manifest == pool_manifest(generate_pool(oracle::load_scenario("exp1"))));

    const fs::path out = temp_dir("record") / "demo.json";
    const cli_result rec = cli("record --scenario " + data("scenarios/exp1.json") + " --script " +
                               data("demos/exp1_blue_on_green.json") + " --out " + q(out));
    REQUIRE(rec.code == 0);
    const scenario_config sc = oracle::load_scenario("exp1");
    CHECK(demonstration_from_json(read_json_file(out)) == oracle::load_demos({"exp1_blue_on_green"}, sc).front());
}
