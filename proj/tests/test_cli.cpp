#include "fixtures.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <sys/wait.h>

using fedego::testing::read_file;
using fedego::testing::TempDir;
using fedego::testing::write_file;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FEDEGO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallConfig = R"({
  "synthetic": {"num_nodes": 300, "num_classes": 3, "feature_dim": 4,
                "intra_edge_prob": 0.03, "inter_edge_prob": 0.005, "seed": 2},
  "partition": {"num_clients": 3, "major_labels_per_client": 2, "local_test_nodes": 15, "seed": 1},
  "federation": {"rounds": 2, "local_epochs": 1, "server_epochs": 1, "batches_per_epoch": 2,
                 "batch_size": 4, "fanout": 2, "model": {"reduction_dim": 4, "hidden_dim": 4}}
})";

}  // namespace

TEST_CASE("cli gradcheck and theorem verification succeed") {
    CHECK(run_cli("gradcheck") == 0);
    CHECK(run_cli("verify-theorem1 --trials 20") == 0);
}

TEST_CASE("cli exit codes") {
    TempDir dir("cli_codes");
    write_file(dir / "good.json", kSmallConfig);
    write_file(dir / "unknown.json", R"({"synthetic": {}, "federation": {"roundz": 1}})");
    write_file(dir / "blowup.json", R"({
      "synthetic": {"num_nodes": 300, "num_classes": 3, "feature_dim": 4, "intra_edge_prob": 0.03,
                    "inter_edge_prob": 0.005},
      "partition": {"num_clients": 2, "major_labels_per_client": 2, "local_test_nodes": 15},
      "federation": {"rounds": 5, "learning_rate": 1e300, "batch_size": 4, "fanout": 2}
    })");
    const std::string out = " --out " + (dir.path() / "o").string();
    CHECK(run_cli("train --config " + (dir / "unknown.json").string() + out) == 2);
    CHECK(run_cli("train --config " + (dir / "missing.json").string() + out) == 3);
    CHECK(run_cli("train --config " + (dir / "good.json").string() + " --strategy fedprox" + out) == 2);
    CHECK(run_cli("gamma-probe --config " + (dir / "good.json").string() + " --gammas 0.5" + out) == 2);
    CHECK(run_cli("train --config " + (dir / "blowup.json").string() + out) == 4);
    CHECK(run_cli("no-such-command") == 2);
}

TEST_CASE("cli partition is reproducible") {
    TempDir dir("cli_partition");
    write_file(dir / "c.json", kSmallConfig);
    REQUIRE(run_cli("partition --config " + (dir / "c.json").string() + " --out " + (dir / "a").string()) == 0);
    REQUIRE(run_cli("partition --config " + (dir / "c.json").string() + " --out " + (dir / "b").string()) == 0);
    const auto a = read_file(dir.path() / "a" / "partition.json");
    CHECK(!a.empty());
    CHECK(a == read_file(dir.path() / "b" / "partition.json"));
    const auto j = nlohmann::json::parse(a);
    CHECK(j["clients"].size() == 3);
}

TEST_CASE("cli train writes per-seed reports and a summary") {
    TempDir dir("cli_train");
    write_file(dir / "c.json", kSmallConfig);
    const std::string base = "train --config " + (dir / "c.json").string() + " --seeds 1,2";
    REQUIRE(run_cli(base + " --strategy local --out " + (dir / "local").string()) == 0);
    const auto summary = nlohmann::json::parse(read_file(dir.path() / "local" / "summary.json"));
    CHECK(summary["runs"].size() == 2);
    CHECK(summary["strategy"] == "local_only");
    for (const auto& run : summary["runs"]) CHECK(run["total_bytes"]["total"] == 0);
    CHECK(std::filesystem::exists(dir.path() / "local" / "seed_2" / "metrics.csv"));

    REQUIRE(run_cli("report " + (dir / "local").string() + " --out " + (dir / "agg").string()) == 0);
    CHECK(read_file(dir.path() / "agg" / "summary.json") == read_file(dir.path() / "local" / "summary.json"));

    REQUIRE(run_cli(base + " --strategy fedego --threads 1 --out " + (dir / "t1").string()) == 0);
    REQUIRE(run_cli(base + " --strategy fedego --threads 3 --out " + (dir / "t3").string()) == 0);
    for (const char* name : {"seed_1/report.json", "seed_2/metrics.csv", "summary.json"}) {
        CHECK(read_file(dir.path() / "t1" / name) == read_file(dir.path() / "t3" / name));
    }
}
