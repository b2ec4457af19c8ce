#include "blab/config.hpp"
#include "blab/errors.hpp"
#include "blab/experiments.hpp"
#include "blab/io.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <functional>
#include <regex>
#include <sstream>

using namespace blab;
using blab::testing::TempDir;
using blab::testing::source_dir;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI from the source directory so relative data paths resolve.
CliResult run_cli(const std::string& args, const TempDir& scratch) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = "cd " + quote(source_dir().string()) + " && " + quote(BLAB_CLI) + " " + args + " >" +
                          quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string config_path(const char* name) { return (source_dir() / "data/configs" / name).string(); }

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, ShippedConfigsRoundTrip) {
  for (const char* name : {"blobs2d.cfg", "mnist_3v5.cfg", "mnist_0v1.cfg", "transfer_cross_model.cfg",
                           "transfer_cross_training_set.cfg", "symmetry_square_xor.cfg", "symmetry_perturbed.cfg"}) {
    const ExperimentConfig cfg = load_config(config_path(name));
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg) << name;
    EXPECT_NO_THROW(validate(cfg)) << name;
  }
}

TEST(Config, DefaultsAndComments) {
  const ExperimentConfig cfg = parse_config("# comment\n[experiment]\n; note\niterations = 7\n");
  EXPECT_EQ(cfg.iterations, 7);
  EXPECT_EQ(cfg.dims, ExperimentConfig{}.dims);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_message([] { parse_config("[nonsense]\nx = 1\n"); }).find("nonsense"), std::string::npos);
  EXPECT_NE(error_message([] { parse_config("[train]\nlearnin_rate = 1\n"); }).find("learnin_rate"),
            std::string::npos);
  EXPECT_NE(error_message([] { parse_config("[experiment]\niterations = many\n"); }).find("iterations"),
            std::string::npos);
  EXPECT_NE(error_message([] { parse_config("[network]\ndims = 2, x, 2\n"); }).find("dims"), std::string::npos);
  EXPECT_THROW(parse_config("[experiment]\niterations = 1\niterations = 2\n"), ConfigError);
}

TEST(Config, Overrides) {
  ExperimentConfig cfg;
  apply_override(cfg, "train.learning_rate", "0.5");
  EXPECT_EQ(cfg.train.learning_rate, 0.5);
  apply_override(cfg, "iterations", "9");
  EXPECT_EQ(cfg.iterations, 9);
  apply_override(cfg, "network.dims", "3,4,2");
  EXPECT_EQ(cfg.dims, (std::vector<int>{3, 4, 2}));
  EXPECT_NE(error_message([&] { apply_override(cfg, "seed", "3"); }).find("seed"), std::string::npos);
  EXPECT_THROW(apply_override(cfg, "kappa", "0.1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "train.nothing", "1"), ConfigError);
  apply_override(cfg, "dataset.seed", "3");
  EXPECT_EQ(cfg.dataset.seed, 3u);
  for (const auto& key : config_keys()) EXPECT_NE(key.find('.'), std::string::npos) << key;
}

TEST(Cli, IterprojWritesRecordsAndChart) {
  TempDir dir;
  const auto run = dir / "run";
  const CliResult r = run_cli("iterproj data/configs/blobs2d.cfg --output " + quote(run.string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto records = parse_records_csv(read_file(run / "records.csv"));
  EXPECT_EQ(records.size(), 6u);
  EXPECT_TRUE(std::filesystem::exists(run / "chart.svg"));
  EXPECT_TRUE(std::filesystem::exists(run / "manifest.json"));
  EXPECT_NE(r.out.find("mean_nn_distance"), std::string::npos);

  const CliResult again = run_cli("iterproj data/configs/blobs2d.cfg --resume --output " + quote(run.string()), dir);
  EXPECT_EQ(again.code, 0) << again.err;
  EXPECT_NE(again.out.find("already complete"), std::string::npos);
}

TEST(Cli, IterationOverride) {
  TempDir dir;
  const auto run = dir / "run";
  const CliResult r =
      run_cli("iterproj data/configs/blobs2d.cfg --iterations 1 --output " + quote(run.string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_records_csv(read_file(run / "records.csv")).size(), 2u);
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir dir;
  write_file_atomic(dir / "bad.cfg", "[train]\nlerning_rate = 0.1\n");
  CliResult r = run_cli("iterproj " + quote((dir / "bad.cfg").string()) + " --output x", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lerning_rate"), std::string::npos) << r.err;
  r = run_cli("iterproj data/configs/blobs2d.cfg --seed 4 --output x", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
  r = run_cli("frobnicate", dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, MissingDatasetExitsThree) {
  TempDir dir;
  const std::string missing = (dir / "nowhere-images").string();
  const CliResult r = run_cli("iterproj data/configs/mnist_3v5.cfg --dataset.images " + quote(missing) +
                                  " --output " + quote((dir / "run").string()),
                              dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nowhere-images"), std::string::npos) << r.err;
}

TEST(Cli, PlotIsStable) {
  TempDir dir;
  const std::string csv =
      "iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count\n"
      "0,3,0,,,0\n1,2.5,1,1,,0\n2,2.2,0.8,1,,0\n3,2.0,0.6,1,,0\n4,1.9,0.5,1,,0\n5,1.85,0.4,1,,0\n";
  write_file_atomic(dir / "records.csv", csv);
  const std::string in = quote((dir / "records.csv").string());
  ASSERT_EQ(run_cli("plot " + in + " " + quote((dir / "a.svg").string()), dir).code, 0);
  ASSERT_EQ(run_cli("plot " + in + " " + quote((dir / "b.svg").string()), dir).code, 0);
  const std::string svg = read_file(dir / "a.svg");
  EXPECT_EQ(svg, read_file(dir / "b.svg"));
  const std::regex circle("<circle");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), circle), std::sregex_iterator()), 6);

  write_file_atomic(dir / "empty.csv", "");
  EXPECT_NE(run_cli("plot " + quote((dir / "empty.csv").string()) + " " + quote((dir / "c.svg").string()), dir).code,
            0);
}

TEST(Cli, VerifySuites) {
  TempDir dir;
  EXPECT_EQ(run_cli("verify nonsense", dir).code, 2);
  EXPECT_EQ(run_cli("verify gradients", dir).code, 0);
  EXPECT_EQ(run_cli("verify claims", dir).code, 0);
  const auto replay = dir / "replay.json";
  const CliResult r = run_cli("verify claims --counterexample --replay-out " + quote(replay.string()), dir);
  EXPECT_EQ(r.code, 1);
  const auto failing = nlohmann::json::parse(read_file(replay));
  ASSERT_EQ(failing.size(), 1u);
  EXPECT_TRUE(failing[0].contains("replay"));
}

TEST(Cli, GenDataWritesTrainAndTest) {
  TempDir dir;
  const auto out = dir / "blobs.csv";
  const CliResult r = run_cli("gen-data data/configs/blobs2d.cfg --out " + quote(out.string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_dataset_csv(out).size(), 200u);
  EXPECT_EQ(read_dataset_csv(dir / "blobs_test.csv").size(), 200u);
}

TEST(Cli, TransferReportsRates) {
  TempDir dir;
  const CliResult r = run_cli("transfer data/configs/transfer_cross_model.cfg --output " +
                                  quote((dir / "run").string()),
                              dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"fooling_rate_transfer", "fooling_rate_source", "fooling_rate_random_baseline"}) {
    EXPECT_GE(j[key].get<double>(), 0.0) << key;
    EXPECT_LE(j[key].get<double>(), 1.0) << key;
  }
  EXPECT_EQ(j["mode"], "cross_model");
}

TEST(Cli, SymmetryReportsClusters) {
  TempDir dir;
  const CliResult r = run_cli("symmetry data/configs/symmetry_square_xor.cfg --symmetry.trials 6 --output " +
                                  quote((dir / "run").string()),
                              dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["trials"], 6);
  EXPECT_GE(j["cluster_count"].get<int>(), 1);
  int total = 0;
  for (const auto& s : j["cluster_sizes"]) total += s.get<int>();
  EXPECT_EQ(total + j["failures"].get<int>(), 6);
}
