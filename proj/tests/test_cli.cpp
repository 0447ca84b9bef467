#include "peck/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace peck;
namespace fs = std::filesystem;

namespace {

const char* quick_config = R"({
  "chain": {"preset": "default", "n_joints": 5},
  "plates": {"gap": 0.01},
  "episode": {"n_init": 3, "periods": 3, "washout": 1, "n_train": 2, "n_eval": 1,
              "sample_rate": 100, "substeps": 28, "stride": 10, "window_stride": 10},
  "train": {"epochs": 50},
  "grid": {"stiffness": [0.1, 1.0], "damping": [0.02, 0.2],
           "inputs": [{"amplitude_deg": 90, "period": 1}]},
  "variant": {"mode": "uniform", "row_ratios": [1, 2], "col_ratios": [1]},
  "realtime": {"schedule": [0, 2], "periods_per_plate": 1, "window_strides": [10, 100]}
})";

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Runs the CLI in-process with stdout and stderr muted.
int run(std::vector<std::string> args)
{
    args.insert(args.begin(), "peck");
    std::vector<char*> argv;
    for (auto& a : args)
        argv.push_back(a.data());
    std::ostringstream sink;
    auto* out = std::cout.rdbuf(sink.rdbuf());
    auto* err = std::cerr.rdbuf(sink.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
    return code;
}

} // namespace

TEST_CASE("argument errors exit with 1")
{
    CHECK(run({}) == 1);
    CHECK(run({"grids"}) == 1);
    CHECK(run({"grids", "--seed", "abc"}) == 1);
    CHECK(run({"launch", "--seed", "1"}) == 1);
    CHECK(run({"sweep", "--seed", "1", "--metric", "auc"}) == 1);
    CHECK(run({"metrics", "--seed", "1"}) == 1);
}

TEST_CASE("configuration errors exit with 1")
{
    const auto dir = scratch("peck_cli_config");
    const auto bad_key = write_file(dir / "bad.json", R"({"chian": {}})");
    const auto bad_json = write_file(dir / "broken.json", "{\"chain\": ");
    const auto bad_value = write_file(dir / "value.json", R"({"episode": {"n_train": 9, "n_eval": 3}})");
    for (const auto& cfg : {bad_key, bad_json, bad_value})
        CHECK(run({"grids", "--seed", "1", "--config", cfg.string(), "--out", (dir / "o").string()}) == 1);
    fs::remove_all(dir);
}

TEST_CASE("file-system errors exit with 3")
{
    const auto dir = scratch("peck_cli_io");
    CHECK(run({"grids", "--seed", "1", "--config", (dir / "missing.json").string()}) == 3);
    const auto blocker = write_file(dir / "file", "x");
    CHECK(run({"grids", "--seed", "1", "--out", (blocker / "sub").string()}) == 3);
    const auto cfg = write_file(dir / "quick.json", quick_config);
    CHECK(run({"metrics", "--seed", "1", "--config", cfg.string(), "--input", (dir / "none.csv").string()}) == 3);
    fs::remove_all(dir);
}

TEST_CASE("grids lists every axis value")
{
    const auto dir = scratch("peck_cli_grids");
    REQUIRE(run({"grids", "--seed", "3", "--out", dir.string()}) == 0);
    std::ifstream is(dir / "grids.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(is, line);)
        ++lines;
    CHECK(lines == 1 + 15 + 15 + 12 + 12);
    CHECK(slurp(dir / "grids.csv").find("stiffness,5,0.6325") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("simulate then recompute metrics from the dump")
{
    const auto dir = scratch("peck_cli_sim");
    const auto cfg = write_file(dir / "quick.json", quick_config);
    REQUIRE(run({"simulate", "--seed", "4", "--config", cfg.string(), "--out", dir.string()}) == 0);
    REQUIRE(fs::exists(dir / "series.csv"));
    REQUIRE(run({"metrics", "--seed", "4", "--config", cfg.string(), "--input", (dir / "series.csv").string(),
                 "--out", dir.string()}) == 0);
    const auto summary = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(summary["max_accuracy"].get<double>() >= 1.0 / 3 - 1e-12);
    CHECK(summary["haptic_memory"].get<double>() <= summary["max_accuracy"].get<double>());
    CHECK(summary["esp_index"].get<double>() >= 0.0);
    CHECK(fs::exists(dir / "accuracy_curve.csv"));
    CHECK(fs::exists(dir / "silhouette.csv"));
    fs::remove_all(dir);
}

TEST_CASE("sweep writes one heatmap per metric and is repeatable")
{
    const auto dir = scratch("peck_cli_sweep");
    const auto cfg = write_file(dir / "quick.json", quick_config);
    for (const char* sub : {"a", "b"})
        REQUIRE(run({"sweep", "--seed", "9", "--config", cfg.string(), "--out", (dir / sub).string(),
                     "--jobs", sub[0] == 'a' ? "1" : "2"}) == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        ++files;
        CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    }
    CHECK(files == 3 * 2 + 1);
    CHECK(fs::exists(dir / "a" / "heatmap_A90_T1_esp.csv"));
    CHECK(fs::exists(dir / "a" / "heatmap_A90_T1_esp.csv.json"));
    CHECK(fs::exists(dir / "a" / "sweep_cells.csv"));

    REQUIRE(run({"sweep", "--seed", "9", "--config", cfg.string(), "--out", (dir / "c").string(),
                 "--metric", "product"}) == 0);
    CHECK(fs::exists(dir / "c" / "heatmap_A90_T1_product.csv"));
    fs::remove_all(dir);
}

TEST_CASE("morphology and realtime commands")
{
    const auto dir = scratch("peck_cli_morph");
    const auto cfg = write_file(dir / "quick.json", quick_config);
    REQUIRE(run({"morphology", "--seed", "2", "--config", cfg.string(), "--out", dir.string()}) == 0);
    for (const char* m : {"lp", "hm", "product"})
        CHECK(fs::exists(dir / (std::string("morphology_") + m + ".csv")));
    CHECK(run({"morphology", "--seed", "2", "--config", cfg.string(), "--out", dir.string(), "--metric", "esp"}) == 1);

    REQUIRE(run({"realtime", "--seed", "2", "--config", cfg.string(), "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "realtime_10.csv"));
    CHECK(fs::exists(dir / "realtime_100.csv"));
    CHECK(slurp(dir / "realtime_table.csv").rfind("window_stride", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("diverging simulations beyond the failure budget exit with 2")
{
    // Overflowing gravity drives the state to infinity on the first step.
    const auto dir = scratch("peck_cli_fail");
    const std::string body = R"(
      "chain": {"preset": "default", "n_joints": 5, "gravity": 1e308},
      "episode": {"n_init": 3, "periods": 3, "washout": 1, "n_train": 2, "n_eval": 1,
                  "sample_rate": 100, "substeps": 1, "stride": 10, "window_stride": 10},
      "grid": {"stiffness": [0.1], "damping": [0.02, 0.2],
               "inputs": [{"amplitude_deg": 120, "period": 1}]},)";
    const auto strict = write_file(dir / "strict.json", "{" + body + R"("failure_budget": 0})");
    const auto lenient = write_file(dir / "lenient.json", "{" + body + R"("failure_budget": 1})");
    CHECK(run({"sweep", "--seed", "1", "--config", strict.string(), "--out", dir.string()}) == 2);
    CHECK(run({"simulate", "--seed", "1", "--config", strict.string(), "--out", dir.string()}) == 2);
    CHECK(run({"sweep", "--seed", "1", "--config", lenient.string(), "--out", dir.string()}) == 0);
    CHECK(slurp(dir / "heatmap_A120_T1_lp.csv").find("NA") != std::string::npos);
    fs::remove_all(dir);
}
