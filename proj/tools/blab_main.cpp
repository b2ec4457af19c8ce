#include "blab/chart.hpp"
#include "blab/config.hpp"
#include "blab/errors.hpp"
#include "blab/experiments.hpp"
#include "blab/io.hpp"
#include "blab/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kDataError = 3, kNumericError = 4 };

// Remaining arguments as `--key value` or `--key=value` overrides.
void apply_overrides(blab::ExperimentConfig& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() <= 2) throw blab::ConfigError("unexpected argument '" + arg + "'");
    const std::string body = arg.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      blab::apply_override(cfg, body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw blab::ConfigError("override '" + arg + "' needs a value");
      blab::apply_override(cfg, body, extras[++i]);
    }
  }
}

blab::ExperimentConfig load(const std::string& path, const std::vector<std::string>& extras,
                            const std::string& output) {
  blab::ExperimentConfig cfg = blab::load_config(path);
  apply_overrides(cfg, extras);
  if (!output.empty()) cfg.output = output;
  return cfg;
}

void print_records(const std::vector<blab::IterationRecord>& records) {
  std::printf("%9s  %16s  %16s  %9s  %9s  %11s\n", "iteration", "mean_nn_distance", "mean_proj_norm", "train_acc",
              "test_acc", "unconverged");
  for (const auto& r : records) {
    auto acc = [](const std::optional<double>& v) { return v ? std::to_string(*v).substr(0, 6) : std::string("-"); };
    std::printf("%9d  %16.6f  %16.6f  %9s  %9s  %11zu\n", r.iteration, r.mean_nn_distance, r.mean_projection_norm,
                acc(r.train_accuracy).c_str(), acc(r.test_accuracy).c_str(), r.unconverged_count);
  }
}

int run_iterative(const blab::ExperimentConfig& cfg, bool resume, bool tracking) {
  if (cfg.output.empty()) throw blab::ConfigError("experiment.output (or --output) must name the run directory");
  const blab::RunOutcome outcome =
      tracking ? blab::run_generalization_tracking(cfg, resume) : blab::run_iterative_projection(cfg, resume);
  if (outcome.resumed && outcome.iterations_executed == 0)
    std::printf("run in %s is already complete; nothing to do\n", cfg.output.c_str());
  const fs::path chart = fs::path(cfg.output) / "chart.svg";
  blab::write_file_atomic(chart, blab::render_distance_chart(outcome.records, tracking ? "generalization tracking"
                                                                                      : "iterative projection"));
  print_records(outcome.records);
  std::printf("wrote %s and %s\n", (fs::path(cfg.output) / "records.csv").c_str(), chart.c_str());
  return kOk;
}

int run_verify(const std::string& suite, std::uint64_t seed, bool counterexample, const std::string& replay_out) {
  blab::SuiteReport report;
  if (suite == "oracle") {
    blab::OracleSuiteOptions opts;
    opts.seed = seed;
    report = blab::run_oracle_suite(opts);
  } else if (suite == "claims") {
    blab::ClaimsSuiteOptions opts;
    opts.seed = seed;
    opts.assert_strict_on_counterexample = counterexample;
    report = blab::run_claims_suite(opts);
  } else {
    report = blab::run_gradients_suite(100, seed);
  }
  std::fputs(blab::format_suite_table(report).c_str(), stdout);
  if (report.passed()) return kOk;
  nlohmann::json failing = nlohmann::json::array();
  for (const auto& c : report.cases)
    if (!c.passed) failing.push_back({{"case", c.name}, {"detail", c.detail}, {"replay", c.replay}});
  const std::string text = failing.dump(2) + "\n";
  std::printf("failing cases:\n%s", text.c_str());
  if (!replay_out.empty()) blab::write_file_atomic(replay_out, text);
  return kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-boundary laboratory: trains small binary classifiers, projects samples onto their "
               "decision boundaries and runs the iterative-projection, transfer, symmetry and generalization "
               "experiments."};
  app.require_subcommand(1);
  app.set_version_flag("--version", blab::kToolVersion);

  std::string config_path, output;
  bool resume = false;
  auto add_run = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "config file")->required();
    sub->add_option("--output", output, "run directory (overrides experiment.output)");
    sub->allow_extras();
    sub->footer("Any config key may be overridden with --section.key VALUE or --key VALUE when the bare key is "
                "unique; overrides beat the file.");
    return sub;
  };
  CLI::App* iterproj = add_run("iterproj", "iterative projection");
  iterproj->add_flag("--resume", resume, "continue the run recorded in the output directory");
  CLI::App* gentrack = add_run("gentrack", "iterative projection with held-out test accuracy");
  gentrack->add_flag("--resume", resume, "continue the run recorded in the output directory");
  CLI::App* transfer = add_run("transfer", "adversarial transfer between two networks");
  CLI::App* symmetry = add_run("symmetry", "boundary clustering on a symmetric layout");

  std::string suite;
  std::uint64_t seed = 1;
  bool counterexample = false;
  std::string replay_out;
  CLI::App* verify = app.add_subcommand("verify", "property suites");
  verify->add_option("suite", suite, "oracle | claims | gradients")->required();
  verify->add_option("--seed", seed, "suite seed");
  verify->add_flag("--counterexample", counterexample,
                   "claims: also assert the strict product inequality on the orthogonal instance");
  verify->add_option("--replay-out", replay_out, "write failing cases as JSON");

  std::string records_path, svg_path, title;
  CLI::App* plot = app.add_subcommand("plot", "SVG chart of a records.csv");
  plot->add_option("records", records_path, "records.csv")->required();
  plot->add_option("svg", svg_path, "output SVG")->required();
  plot->add_option("--title", title, "chart title");

  std::string data_out;
  CLI::App* gen = app.add_subcommand("gen-data", "write the configured dataset as CSV");
  gen->add_option("config", config_path, "config file")->required();
  gen->add_option("--out", data_out, "training CSV; a held-out set goes to <stem>_test.csv")->required();
  gen->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (iterproj->parsed()) return run_iterative(load(config_path, iterproj->remaining(), output), resume, false);
    if (gentrack->parsed()) return run_iterative(load(config_path, gentrack->remaining(), output), resume, true);
    if (transfer->parsed()) {
      const blab::TransferReport r = blab::run_transfer(load(config_path, transfer->remaining(), output));
      const nlohmann::json j = {{"mode", std::string(blab::to_string(r.mode))},
                                {"kappa", r.kappa},
                                {"fooling_rate_transfer", r.fooling_rate_transfer},
                                {"fooling_rate_source", r.fooling_rate_source},
                                {"fooling_rate_random_baseline", r.fooling_rate_random_baseline},
                                {"source_clean_accuracy", r.source_clean_accuracy},
                                {"target_clean_accuracy", r.target_clean_accuracy},
                                {"crafted", r.crafted},
                                {"valid", r.valid},
                                {"note", r.note}};
      std::printf("%s\n", j.dump(2).c_str());
      return kOk;
    }
    if (symmetry->parsed()) {
      const blab::ExperimentConfig cfg = load(config_path, symmetry->remaining(), output);
      const blab::SymmetryReport r = blab::run_symmetry_experiment(cfg);
      auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
      const nlohmann::json j = {{"trials", r.trials},
                                {"failures", r.failures},
                                {"cluster_count", r.cluster_count},
                                {"cluster_sizes", r.cluster_sizes},
                                {"dominant_share", r.dominant_share},
                                {"within_cluster_transfer", opt(r.within_cluster_transfer)},
                                {"cross_cluster_transfer", opt(r.cross_cluster_transfer)}};
      std::printf("%s\n", j.dump(2).c_str());
      return kOk;
    }
    if (verify->parsed()) {
      if (suite != "oracle" && suite != "claims" && suite != "gradients") {
        std::fprintf(stderr, "error: unknown suite '%s' (expected oracle, claims or gradients)\n", suite.c_str());
        return kConfigError;
      }
      return run_verify(suite, seed, counterexample, replay_out);
    }
    if (plot->parsed()) {
      const auto records = blab::parse_records_csv(blab::read_file(records_path));
      blab::write_file_atomic(svg_path, blab::render_distance_chart(records, title));
      std::printf("wrote %s (%zu points)\n", svg_path.c_str(), records.size());
      return kOk;
    }
    if (gen->parsed()) {
      blab::ExperimentConfig cfg = blab::load_config(config_path);
      apply_overrides(cfg, gen->remaining());
      blab::validate(cfg);
      const blab::DatasetSplit split = blab::build_dataset(cfg.dataset);
      blab::write_dataset_csv(split.train, data_out);
      std::printf("wrote %s (%zu samples)\n", data_out.c_str(), split.train.size());
      if (split.test) {
        fs::path test_path = data_out;
        test_path.replace_filename(test_path.stem().string() + "_test" + test_path.extension().string());
        blab::write_dataset_csv(*split.test, test_path);
        std::printf("wrote %s (%zu samples)\n", test_path.c_str(), split.test->size());
      }
      return kOk;
    }
  } catch (const blab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const blab::InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const blab::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumericError;
  } catch (const blab::Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  }
  return kConfigError;
}
