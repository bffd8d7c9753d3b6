#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "test_support.hpp"

using namespace tobit;
using nlohmann::json;
using tobit::testing::fresh_dir;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "tobit-iht");
  return cli::run(args);
}

json read_json(const std::filesystem::path& path) {
  return json::parse(io::read_text(path));
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Small strong-signal dataset shared by the fit tests.
const std::filesystem::path& sim_dir() {
  static const std::filesystem::path dir = [] {
    auto d = fresh_dir("cli_sim");
    const int rc = run_cli({"simulate", "--n", "300", "--d", "40", "--s0", "3", "--beta0", "0",
                            "--signal", "2", "--sigma", "0.5", "--seed", "5", "--out",
                            d.string()});
    EXPECT_EQ(rc, 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(CliSimulate, WritesDatasetTruthAndManifest) {
  const auto& dir = sim_dir();
  for (const char* f : {"data.csv", "truth.json", "manifest.json", "shards.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(count_lines(io::read_text(dir / "data.csv")), 301u);
  const json manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest["command"], "simulate");
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_EQ(manifest["config"]["n"], 300);
  EXPECT_FALSE(manifest["version"].get<std::string>().empty());
  EXPECT_FALSE(manifest["rng_algorithm"].get<std::string>().empty());
  const GroundTruth truth = io::read_truth_json(dir / "truth.json");
  EXPECT_EQ(truth.s0, 3);
  EXPECT_EQ(truth.params.beta.size(), 41);
}

TEST(CliSimulate, RerunIsByteIdentical) {
  const auto a = fresh_dir("cli_rerun_a");
  const auto b = fresh_dir("cli_rerun_b");
  for (const auto& d : {a, b}) {
    ASSERT_EQ(run_cli({"simulate", "--n", "50", "--d", "8", "--seed", "9", "--out", d.string()}),
              0);
  }
  EXPECT_EQ(io::read_text(a / "data.csv"), io::read_text(b / "data.csv"));
  EXPECT_EQ(io::read_text(a / "truth.json"), io::read_text(b / "truth.json"));
}

TEST(CliSimulate, ShardedOutput) {
  const auto dir = fresh_dir("cli_shards");
  ASSERT_EQ(run_cli({"simulate", "--n", "103", "--d", "5", "--shards", "4", "--out",
                     dir.string()}),
            0);
  const io::ShardManifest m = io::read_shard_manifest(dir / "shards.json");
  ASSERT_EQ(m.shards.size(), 4u);
  Index total = 0;
  for (const auto& e : m.shards) {
    EXPECT_TRUE(std::filesystem::exists(dir / e.file));
    total += e.rows;
  }
  EXPECT_EQ(total, 103);
  EXPECT_EQ(io::load_shards(dir / "shards.json").size(), 4u);
}

TEST(CliFit, RespectsSparsityBudget) {
  const auto out = fresh_dir("cli_fit");
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--s", "3", "--truth",
                     (sim_dir() / "truth.json").string(), "--out", out.string()}),
            0);
  const json r = read_json(out / "result.json");
  EXPECT_LE(r["support"].size(), 3u);
  EXPECT_EQ(r["s"], 3);
  EXPECT_TRUE(r.contains("metrics"));
  EXPECT_TRUE(std::filesystem::exists(out / "trace.csv"));
  // matches the library on the same file
  IhtConfig cfg;
  cfg.s = 3;
  const FitResult fit = tobit::fit(io::read_dataset_csv(sim_dir() / "data.csv"), cfg);
  EXPECT_EQ(io::read_theta_json(out / "result.json"), fit.theta);
  EXPECT_EQ(count_lines(io::read_text(out / "trace.csv")), fit.trace.size() + 1);
}

TEST(CliFit, ZeroIterationsReturnsInit) {
  const auto out = fresh_dir("cli_fit_zero");
  const Theta init{Vector::Zero(41), 0.8};
  io::write_text(out / "init.json", io::theta_json(init));
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--s", "3", "--iters",
                     "0", "--init", (out / "init.json").string(), "--out", out.string()}),
            0);
  EXPECT_EQ(io::read_theta_json(out / "result.json"), init);
}

TEST(CliFit, CrossValidationMatchesLibrary) {
  const auto out = fresh_dir("cli_fit_cv");
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--cv", "1:8",
                     "--folds", "5", "--seed", "3", "--out", out.string()}),
            0);
  const json r = read_json(out / "result.json");
  const std::vector<Index> grid = {1, 2, 3, 4, 5, 6, 7, 8};
  const CvResult cv =
      cross_validate_s(io::read_dataset_csv(sim_dir() / "data.csv"), grid, 5, IhtConfig{}, 3);
  EXPECT_EQ(r["cv"]["best_s"], cv.best_s);
  EXPECT_EQ(r["s"], cv.best_s);
  ASSERT_EQ(r["cv"]["table"].size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) {
    EXPECT_EQ(r["cv"]["table"][k]["mean_cv_nll"].get<double>(), cv.table[k].mean_cv_nll);
  }
  EXPECT_EQ(count_lines(io::read_text(out / "cv.csv")), 9u);
}

TEST(CliFitDist, SingleShardMatchesFit) {
  const auto fit_out = fresh_dir("cli_single_fit");
  const auto dist_out = fresh_dir("cli_single_dist");
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--s", "3", "--out",
                     fit_out.string()}),
            0);
  ASSERT_EQ(run_cli({"fit-dist", "--shards", (sim_dir() / "shards.json").string(), "--s", "3",
                     "--rounds", "1", "--out", dist_out.string()}),
            0);
  EXPECT_EQ(io::read_theta_json(dist_out / "result.json"),
            io::read_theta_json(fit_out / "result.json"));
  const json r = read_json(dist_out / "result.json");
  EXPECT_EQ(r["comm"]["vectors_sent"], 0);
}

TEST(CliFitDist, AutoRoundsAndCommunication) {
  const auto sim = fresh_dir("cli_dist_sim");
  const auto out = fresh_dir("cli_dist_fit");
  ASSERT_EQ(run_cli({"simulate", "--n", "2000", "--d", "30", "--s0", "3", "--shards", "10",
                     "--seed", "4", "--out", sim.string()}),
            0);
  ASSERT_EQ(run_cli({"fit-dist", "--shards", (sim / "shards.json").string(), "--s", "4",
                     "--rounds", "auto", "--init", "central", "--out", out.string()}),
            0);
  const json r = read_json(out / "result.json");
  EXPECT_EQ(r["machines"], 10);
  EXPECT_EQ(r["rounds"], 2);
  EXPECT_EQ(r["comm"]["vectors_sent"], 2 * 2 * 9);
  EXPECT_EQ(r["comm"]["bytes_estimate"], 36 * (30 + 2) * 8);
  EXPECT_EQ(r["anchors"].size(), 2u);
  const std::string trace = io::read_text(out / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "round,iter,nll,step_norm,support_size,eta_used");
}

TEST(CliExperiment, RateShape) {
  const auto out = fresh_dir("cli_rate");
  ASSERT_EQ(run_cli({"experiment", "rate", "--n", "100,200", "--d", "20", "--s0", "2", "--s",
                     "2", "--reps", "3", "--out", out.string()}),
            0);
  const std::string csv = io::read_text(out / "rate.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,median_l2,iqr_l2,replications");
  EXPECT_EQ(count_lines(csv), 3u);
}

TEST(CliExperiment, ConvergenceShape) {
  const auto out = fresh_dir("cli_conv");
  ASSERT_EQ(run_cli({"experiment", "convergence", "--n", "200", "--d", "20", "--s0", "2", "--s",
                     "2", "--reps", "2", "--out", out.string()}),
            0);
  EXPECT_EQ(count_lines(io::read_text(out / "convergence_summary.csv")), 3u);
  EXPECT_GT(count_lines(io::read_text(out / "convergence.csv")), 3u);
}

TEST(CliExperiment, DistVsPooledShape) {
  const auto out = fresh_dir("cli_paired");
  ASSERT_EQ(run_cli({"experiment", "dist-vs-pooled", "--M", "3", "--n-per-shard", "100", "--d",
                     "20", "--s0", "2", "--s", "2", "--reps", "2", "--out", out.string()}),
            0);
  const std::string csv = io::read_text(out / "paired.csv");
  EXPECT_EQ(count_lines(csv), 3u);
}

TEST(CliExitCodes, UsageDataDivergence) {
  const auto out = fresh_dir("cli_codes");
  const std::string data = (sim_dir() / "data.csv").string();
  EXPECT_EQ(run_cli({"fit", "--data", data, "--out", out.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"fit", "--data", data, "--s", "3", "--bogus", "--out", out.string()}),
            cli::kUsage);
  EXPECT_EQ(run_cli({"fit", "--data", data, "--s", "999", "--out", out.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"fit", "--data", (out / "missing.csv").string(), "--s", "3", "--out",
                     out.string()}),
            cli::kData);
  io::write_text(out / "bad.csv", "y,censored,x1\n1,1,0\n");
  EXPECT_EQ(run_cli({"fit", "--data", (out / "bad.csv").string(), "--s", "1", "--out",
                     out.string()}),
            cli::kData);
  EXPECT_EQ(run_cli({"fit", "--data", data, "--s", "3", "--eta", "1e200", "--no-backtracking",
                     "--out", out.string()}),
            cli::kDivergence);
  io::write_text(out / "cfg.json", R"({"s": 3, "unknown_key": 1})");
  EXPECT_EQ(run_cli({"fit", "--data", data, "--config", (out / "cfg.json").string(), "--out",
                     out.string()}),
            cli::kUsage);
  EXPECT_EQ(run_cli({"nonsense"}), cli::kUsage);
}

TEST(CliConfig, FlagsOverrideConfigFile) {
  const auto out = fresh_dir("cli_config");
  io::write_text(out / "cfg.json", R"({"s": 5, "iters": 0})");
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--config",
                     (out / "cfg.json").string(), "--s", "2", "--out", out.string()}),
            0);
  const json m = read_json(out / "manifest.json");
  EXPECT_EQ(m["config"]["s"], 2);
  EXPECT_EQ(m["config"]["iters"], 0);
}

TEST(CliReplay, ReproducesOutputs) {
  const auto first = fresh_dir("cli_replay_a");
  const auto second = fresh_dir("cli_replay_b");
  ASSERT_EQ(run_cli({"fit", "--data", (sim_dir() / "data.csv").string(), "--s", "3", "--out",
                     first.string()}),
            0);
  ASSERT_EQ(run_cli({"replay", (first / "manifest.json").string(), "--out", second.string()}),
            0);
  EXPECT_EQ(io::read_text(first / "result.json"), io::read_text(second / "result.json"));
  EXPECT_EQ(io::read_text(first / "trace.csv"), io::read_text(second / "trace.csv"));
  EXPECT_EQ(read_json(first / "manifest.json")["config"],
            read_json(second / "manifest.json")["config"]);
}

TEST(CliThreads, EnvironmentFallback) {
  const auto a = fresh_dir("cli_threads_a");
  const auto b = fresh_dir("cli_threads_b");
  const std::vector<std::string> common = {"experiment", "rate", "--n", "100", "--d", "10",
                                           "--s0", "2", "--s", "2", "--reps", "4"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  ::setenv("TOBIT_IHT_THREADS", "3", 1);
  ASSERT_EQ(run_cli(args), 0);
  ::setenv("TOBIT_IHT_THREADS", "zero", 1);
  args = common;
  args.insert(args.end(), {"--out", b.string()});
  EXPECT_EQ(run_cli(args), cli::kUsage);
  ::unsetenv("TOBIT_IHT_THREADS");
  ASSERT_EQ(run_cli(args), 0);
  EXPECT_EQ(io::read_text(a / "rate.csv"), io::read_text(b / "rate.csv"));
}
