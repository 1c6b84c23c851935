#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "sspo/config.hpp"
#include "sspo/errors.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SSPO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli end to end: train, eval, probe, compare, report") {
    const fs::path dir = fs::temp_directory_path() / "sspo_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    sspo::TrainConfig c;
    c.method = sspo::Method::sspo;
    c.group_size = 4;
    c.batch_queries = 4;
    c.updates = 3;
    c.eval_queries = 8;
    c.seed = 2;
    {
        std::ofstream out(dir / "config.json");
        out << sspo::config_to_json(c).dump(2);
    }

    REQUIRE(run("train --config " + (dir / "config.json").string() + " --out " +
                (dir / "run_a").string()) == sspo::exit_ok);
    REQUIRE(fs::exists(dir / "run_a" / "metrics.jsonl"));
    REQUIRE(fs::exists(dir / "run_a" / "checkpoint.sspo"));
    REQUIRE(fs::exists(dir / "run_a" / "tasks_eval.jsonl"));

    c.method = sspo::Method::grpo;
    c.pruning = false;
    {
        std::ofstream out(dir / "config_grpo.json");
        out << sspo::config_to_json(c).dump(2);
    }
    REQUIRE(run("train --config " + (dir / "config_grpo.json").string() + " --out " +
                (dir / "run_b").string()) == sspo::exit_ok);

    REQUIRE(run("eval --checkpoint " + (dir / "run_a" / "checkpoint.sspo").string() +
                " --tasks " + (dir / "run_a" / "tasks_eval.jsonl").string()) == sspo::exit_ok);

    REQUIRE(run("probe --checkpoint " + (dir / "run_a" / "checkpoint.sspo").string() +
                " --tasks " + (dir / "run_a" / "tasks_eval.jsonl").string() + " --out " +
                (dir / "probe_out").string()) == sspo::exit_ok);
    REQUIRE(fs::exists(dir / "probe_out" / "summary.csv"));
    REQUIRE(fs::exists(dir / "probe_out" / "advantages.jsonl"));

    REQUIRE(run("compare --runs " + (dir / "run_a" / "metrics.jsonl").string() + " " +
                (dir / "run_b" / "metrics.jsonl").string() + " --out " +
                (dir / "cmp.csv").string()) == sspo::exit_ok);
    REQUIRE(fs::exists(dir / "cmp.csv"));

    REQUIRE(run("report --run " + (dir / "run_a").string()) == sspo::exit_ok);
    REQUIRE(fs::exists(dir / "run_a" / "report.svg"));

    fs::remove_all(dir);
}

TEST_CASE("cli exit codes") {
    const fs::path dir = fs::temp_directory_path() / "sspo_cli_exit_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Unknown subcommand and missing options are configuration errors.
    REQUIRE(run("no_such_command") == sspo::exit_config);
    REQUIRE(run("train") == sspo::exit_config);

    // Invalid config value.
    {
        std::ofstream out(dir / "bad.json");
        out << "{\"group_size\": 1}";
    }
    REQUIRE(run("train --config " + (dir / "bad.json").string() + " --out " +
                (dir / "x").string()) == sspo::exit_config);

    // Unknown config key.
    {
        std::ofstream out(dir / "unknown.json");
        out << "{\"group_sizes\": 8}";
    }
    REQUIRE(run("train --config " + (dir / "unknown.json").string() + " --out " +
                (dir / "x").string()) == sspo::exit_config);

    // Missing/corrupt files are I/O errors.
    REQUIRE(run("eval --checkpoint " + (dir / "missing.sspo").string() + " --tasks " +
                (dir / "missing.jsonl").string()) == sspo::exit_io);
    {
        std::ofstream out(dir / "corrupt.sspo", std::ios::binary);
        out << "not a checkpoint";
    }
    REQUIRE(run("eval --checkpoint " + (dir / "corrupt.sspo").string() + " --tasks " +
                (dir / "missing.jsonl").string()) == sspo::exit_io);

    // Help succeeds.
    REQUIRE(run("--help") == sspo::exit_ok);

    fs::remove_all(dir);
}
