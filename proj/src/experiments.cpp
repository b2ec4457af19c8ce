#include "blab/experiments.hpp"

#include "blab/checkpoint.hpp"
#include "blab/config.hpp"
#include "blab/errors.hpp"
#include "blab/io.hpp"
#include "blab/manifest.hpp"
#include "blab/parallel.hpp"
#include "blab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <cmath>

namespace blab {
namespace fs = std::filesystem;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string iter_name(int k, const char* extension) { return "iter_" + std::to_string(k) + extension; }

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

std::string optional_text(const std::optional<double>& value) { return value ? format_double(*value) : std::string(); }

std::optional<double> optional_value(std::string_view text) {
  if (text.empty()) return std::nullopt;
  return parse_double(text);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

constexpr std::string_view kRecordsHeader =
    "iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count";

std::string format_projection_csv(const ProjectedDataset& projected) {
  std::string out = "index,label,converged,distance,residual,method\n";
  for (std::size_t i = 0; i < projected.results.size(); ++i) {
    const ProjectionResult& r = projected.results[i];
    out += std::to_string(i) + "," + std::to_string(projected.data.labels[i]) + "," + (r.converged ? "1" : "0") + "," +
           format_double(r.distance) + "," + format_double(r.residual) + "," +
           (projected.misclassified[i] ? "misclassified" : to_string(r.method)) + "\n";
  }
  return out;
}

nlohmann::json iteration_log(const std::vector<IterationRecord>& records) {
  nlohmann::json log = nlohmann::json::array();
  for (const IterationRecord& r : records) {
    nlohmann::json entry = {{"iteration", r.iteration},
                            {"epochs_run", r.epochs_run},
                            {"stopped_reason", r.stopped_reason},
                            {"misclassified", r.misclassified_count},
                            {"global_difference", nullptr}};
    if (r.global_difference) entry["global_difference"] = *r.global_difference;
    log.push_back(std::move(entry));
  }
  return log;
}

void restore_iteration_log(std::vector<IterationRecord>& records, const nlohmann::json& log) {
  try {
    if (!log.is_array() || log.size() < records.size()) throw DataError("manifest iteration log is incomplete");
    for (std::size_t k = 0; k < records.size(); ++k) {
      const nlohmann::json& entry = log.at(k);
      if (entry.at("iteration").get<int>() != records[k].iteration)
        throw DataError("manifest iteration log does not match records.csv");
      records[k].epochs_run = entry.at("epochs_run").get<int>();
      records[k].stopped_reason = entry.at("stopped_reason").get<std::string>();
      records[k].misclassified_count = entry.at("misclassified").get<std::size_t>();
      const nlohmann::json& phi = entry.at("global_difference");
      if (!phi.is_null()) records[k].global_difference = phi.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt manifest iteration log: ") + e.what());
  }
}

/// Run directory bookkeeping for the iterative runners.
class RunDirectory {
 public:
  RunDirectory(const ExperimentConfig& cfg, std::string command) : root_(cfg.output), enabled_(!cfg.output.empty()) {
    manifest_.tool_version = kToolVersion;
    manifest_.command = std::move(command);
    manifest_.config = serialize_config(cfg);
    manifest_.started = utc_timestamp();
  }

  bool enabled() const noexcept { return enabled_; }
  const fs::path& root() const noexcept { return root_; }
  RunManifest& manifest() noexcept { return manifest_; }

  void create() const {
    if (!enabled_) return;
    for (const char* sub : {"checkpoints", "projections", "datasets"}) fs::create_directories(root_ / sub);
  }

  void write_dataset(int k, const Dataset& data) const {
    if (enabled_) write_dataset_csv(data, root_ / "datasets" / iter_name(k, ".csv"));
  }

  void write_iteration(int k, const Mlpd& net, const ProjectedDataset& projected) const {
    if (!enabled_) return;
    write_file_atomic(root_ / "checkpoints" / iter_name(k, ".blab"), encode_checkpoint(net));
    write_file_atomic(root_ / "projections" / iter_name(k, ".csv"), format_projection_csv(projected));
  }

  void commit(const std::vector<IterationRecord>& records, const std::string& status, const std::string& error = {}) {
    if (!enabled_) return;
    write_file_atomic(root_ / "records.csv", format_records_csv(records));
    manifest_.status = status;
    manifest_.error = error;
    manifest_.completed_iterations = records.empty() ? 0 : records.back().iteration;
    manifest_.details = {{"iterations", iteration_log(records)}};
    if (status != "running") manifest_.finished = utc_timestamp();
    write_manifest(root_, manifest_);
  }

 private:
  fs::path root_;
  bool enabled_;
  RunManifest manifest_;
};

double mean_displacement(const ProjectedDataset& projected) {
  double sum = 0.0;
  for (const ProjectionResult& r : projected.results)
    if (r.converged) sum += r.distance;
  return sum / static_cast<double>(projected.results.size());
}

RunOutcome run_iterations(const ExperimentConfig& cfg, bool resume, const char* command, bool require_test) {
  validate(cfg);
  const DatasetSplit split = build_dataset(cfg.dataset);
  if (require_test && (!split.test || split.test->size() == 0))
    throw ConfigError("generalization tracking needs a nonempty test set (dataset.test_size or dataset.test_path)");
  if (split.train.dim() != cfg.dims.front())
    throw ConfigError("network.dims starts with " + std::to_string(cfg.dims.front()) + " but the dataset has dimension " +
                      std::to_string(split.train.dim()));

  RunDirectory dir(cfg, command);
  RunOutcome out;
  Dataset working = split.train;
  std::optional<Dataset> before;
  int first = 1;

  if (resume) {
    if (!dir.enabled()) throw ConfigError("resume needs experiment.output");
    const RunManifest previous = read_manifest(dir.root());
    ExperimentConfig recorded = parse_config(previous.config);
    recorded.iterations = cfg.iterations;
    if (!(recorded == cfg)) throw ConfigError("config differs from the run recorded in " + dir.root().string());
    const int done = previous.completed_iterations;
    out.records = parse_records_csv(read_file(dir.root() / "records.csv"));
    if (out.records.size() < static_cast<std::size_t>(done) + 1)
      throw DataError("records.csv holds fewer rows than the manifest reports");
    out.records.resize(static_cast<std::size_t>(done) + 1);
    restore_iteration_log(out.records, previous.details.value("iterations", nlohmann::json::array()));
    working = read_dataset_csv(dir.root() / "datasets" / iter_name(done, ".csv"));
    if (done >= 1) before = read_dataset_csv(dir.root() / "datasets" / iter_name(done - 1, ".csv"));
    dir.manifest().started = previous.started;
    out.resumed = true;
    if (done >= cfg.iterations) return out;
    first = done + 1;
  } else {
    dir.create();
    IterationRecord raw;
    raw.iteration = 0;
    raw.mean_nn_distance = nearest_opposite_mean_distance(working);
    out.records.push_back(raw);
    dir.write_dataset(0, working);
    dir.commit(out.records, "running");
  }

  for (int k = first; k <= cfg.iterations; ++k) {
    try {
      Mlpd net = init_network<double>(cfg.dims, init_seed(cfg.seed, k));
      TrainConfig tc = cfg.train;
      tc.seed = shuffle_seed(cfg.seed, k);
      const TrainReport report = train(net, working, tc);
      ProjectedDataset projected = project_dataset(net, working, cfg.projector, thread_count(), MisclassifiedPolicy::keep);
      dir.write_iteration(k, net, projected);
      if (static_cast<double>(projected.unconverged) > cfg.abort_fraction * static_cast<double>(working.size()))
        throw ProjectionFailure("iteration " + std::to_string(k) + ": " + std::to_string(projected.unconverged) + " of " +
                                std::to_string(working.size()) + " projections did not converge");

      IterationRecord rec;
      rec.iteration = k;
      rec.mean_nn_distance = nearest_opposite_mean_distance(projected.data);
      rec.mean_projection_norm = mean_displacement(projected);
      rec.train_accuracy = report.final_train_accuracy;
      if (split.test && split.test->size() > 0) rec.test_accuracy = accuracy(net, *split.test);
      rec.unconverged_count = projected.unconverged;
      rec.epochs_run = report.epochs_run;
      rec.stopped_reason = to_string(report.stopped_reason);
      rec.misclassified_count = projected.misclassified_count;

      // This network separates the previous projected set, so it scores
      // the previous classifier's global difference.
      if (before) {
        const GlobalDifferenceEstimate phi = score_global_difference(
            working.samples - before->samples, projected.data.samples - working.samples, cfg.cosine_threshold);
        out.records.back().global_difference = phi.phi;
      }

      before = std::move(working);
      working = std::move(projected.data);
      out.records.push_back(std::move(rec));
      ++out.iterations_executed;
      dir.write_dataset(k, working);
      dir.commit(out.records, k == cfg.iterations ? "complete" : "running");
    } catch (const Error& e) {
      dir.commit(out.records, "aborted", e.what());
      throw;
    }
  }
  return out;
}

std::vector<std::size_t> correct_under_both(const Mlpd& a, const Mlpd& b, const Dataset& data) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd x = data.sample(i);
    if (is_correct(margin(a, x), data.labels[i]) && is_correct(margin(b, x), data.labels[i])) out.push_back(i);
  }
  return out;
}

nlohmann::json to_json(const TransferReport& r) {
  return {{"mode", std::string(to_string(r.mode))},
          {"kappa", r.kappa},
          {"fooling_rate_transfer", r.fooling_rate_transfer},
          {"fooling_rate_source", r.fooling_rate_source},
          {"fooling_rate_random_baseline", r.fooling_rate_random_baseline},
          {"source_clean_accuracy", r.source_clean_accuracy},
          {"target_clean_accuracy", r.target_clean_accuracy},
          {"crafted", r.crafted},
          {"valid", r.valid},
          {"note", r.note}};
}

nlohmann::json to_json(const SymmetryReport& r) {
  nlohmann::json directions = nlohmann::json::array();
  for (const auto& trial : r.directions) {
    nlohmann::json points = nlohmann::json::array();
    for (const Eigen::Vector2d& d : trial) points.push_back({d.x(), d.y()});
    directions.push_back(std::move(points));
  }
  auto optional_json = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"trials", r.trials},
          {"failures", r.failures},
          {"cluster_count", r.cluster_count},
          {"cluster_sizes", r.cluster_sizes},
          {"assignment", r.assignment},
          {"dominant_share", r.dominant_share},
          {"within_cluster_transfer", optional_json(r.within_cluster_transfer)},
          {"cross_cluster_transfer", optional_json(r.cross_cluster_transfer)},
          {"directions", std::move(directions)}};
}

void write_report(const ExperimentConfig& cfg, const char* command, const char* file, const nlohmann::json& report,
                  const std::string& started) {
  if (cfg.output.empty()) return;
  const fs::path root = cfg.output;
  fs::create_directories(root);
  write_file_atomic(root / file, report.dump(2) + "\n");
  RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.command = command;
  manifest.config = serialize_config(cfg);
  manifest.started = started;
  manifest.finished = utc_timestamp();
  manifest.status = "complete";
  manifest.details = report;
  write_manifest(root, manifest);
}

}  // namespace

std::string_view to_string(DataSource source) {
  switch (source) {
    case DataSource::blobs: return "blobs";
    case DataSource::mnist: return "mnist";
    case DataSource::csv: return "csv";
    case DataSource::layout: return "layout";
  }
  return "unknown";
}

std::string_view to_string(TransferMode mode) {
  return mode == TransferMode::cross_model ? "cross_model" : "cross_training_set";
}

DataSource parse_data_source(std::string_view name) {
  if (name == "blobs") return DataSource::blobs;
  if (name == "mnist") return DataSource::mnist;
  if (name == "csv") return DataSource::csv;
  if (name == "layout") return DataSource::layout;
  throw InvalidArgument("unknown dataset source '" + std::string(name) + "'");
}

TransferMode parse_transfer_mode(std::string_view name) {
  if (name == "cross_model") return TransferMode::cross_model;
  if (name == "cross_training_set") return TransferMode::cross_training_set;
  throw InvalidArgument("unknown transfer mode '" + std::string(name) + "'");
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.iterations >= 1, "experiment.iterations must be at least 1");
  require(cfg.abort_fraction >= 0.0 && cfg.abort_fraction <= 1.0, "experiment.abort_fraction must lie in [0, 1]");
  require(cfg.cosine_threshold > 0.0 && cfg.cosine_threshold <= 1.0, "experiment.cosine_threshold must lie in (0, 1]");
  require(cfg.dims.size() >= 2 && cfg.dims.back() == 2, "network.dims must end with 2 output logits");
  for (int d : cfg.dims) require(d >= 1, "network.dims entries must be positive");
  try {
    validate(cfg.projector);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("projector: ") + e.what());
  }
  const DatasetSpec& ds = cfg.dataset;
  require(ds.test_size % 2 == 0, "dataset.test_size must be even (balanced classes)");
  switch (ds.source) {
    case DataSource::blobs:
      require(ds.dim >= 1, "dataset.dim must be positive");
      require(ds.center0.size() == static_cast<std::size_t>(ds.dim) &&
                  ds.center1.size() == static_cast<std::size_t>(ds.dim),
              "dataset.center0 and dataset.center1 must have dataset.dim entries");
      require(ds.sigma > 0.0, "dataset.sigma must be positive");
      require(ds.per_class >= 1, "dataset.per_class must be positive");
      break;
    case DataSource::mnist:
      require(!ds.images.empty() && !ds.labels.empty(), "dataset.images and dataset.labels are required for mnist");
      require(ds.subset >= 2 && ds.subset % 2 == 0, "dataset.subset must be even and at least 2");
      break;
    case DataSource::csv: require(!ds.path.empty(), "dataset.path is required for csv"); break;
    case DataSource::layout: break;
  }
  require(cfg.transfer.kappa >= 0.0, "transfer.kappa must be nonnegative");
  require(cfg.symmetry.trials >= 1, "symmetry.trials must be at least 1");
  require(cfg.symmetry.kappa >= 0.0, "symmetry.kappa must be nonnegative");
  require(cfg.symmetry.cluster_cosine > -1.0 && cfg.symmetry.cluster_cosine <= 1.0,
          "symmetry.cluster_cosine must lie in (-1, 1]");
  require(cfg.symmetry.perturb_shift.size() == 2 * cfg.symmetry.perturb_indices.size(),
          "symmetry.perturb_shift needs one dx, dy pair per entry of symmetry.perturb_indices");
}

DatasetSplit build_dataset(const DatasetSpec& spec) {
  DatasetSplit out;
  switch (spec.source) {
    case DataSource::blobs: {
      const Eigen::VectorXd c0 = to_vector(spec.center0);
      const Eigen::VectorXd c1 = to_vector(spec.center1);
      out.train = gen_gaussian_blobs(spec.dim, spec.per_class, c0, c1, spec.sigma, spec.seed);
      if (spec.test_size > 0)
        out.test = gen_gaussian_blobs(spec.dim, spec.test_size / 2, c0, c1, spec.sigma, derive_seed(spec.seed, 1));
      break;
    }
    case DataSource::mnist: {
      const Dataset pool = filter_binary(load_idx(spec.images, spec.labels), spec.class_a, spec.class_b);
      const std::vector<std::size_t> picked = sample_balanced_indices(pool, spec.subset, spec.seed);
      out.train = pool.select(picked);
      out.train.name = "mnist " + std::to_string(spec.class_a) + " vs " + std::to_string(spec.class_b);
      if (spec.test_size > 0) {
        out.test = pool.select(sample_balanced_indices(pool, spec.test_size, derive_seed(spec.seed, 1), picked));
        out.test->name = out.train.name + " (test)";
      }
      break;
    }
    case DataSource::csv:
      out.train = read_dataset_csv(spec.path);
      if (!spec.test_path.empty()) out.test = read_dataset_csv(spec.test_path);
      break;
    case DataSource::layout: out.train = gen_symmetric_layout(spec.layout).data; break;
  }
  return out;
}

std::uint64_t init_seed(std::uint64_t master, int iteration) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(iteration));
}

std::uint64_t shuffle_seed(std::uint64_t master, int iteration) {
  return derive_seed(master, 2 * static_cast<std::uint64_t>(iteration) + 1);
}

std::string format_records_csv(const std::vector<IterationRecord>& records) {
  std::string out(kRecordsHeader);
  out += "\n";
  for (const IterationRecord& r : records) {
    out += std::to_string(r.iteration) + "," + format_double(r.mean_nn_distance) + "," +
           format_double(r.mean_projection_norm) + "," + optional_text(r.train_accuracy) + "," +
           optional_text(r.test_accuracy) + "," + std::to_string(r.unconverged_count) + "\n";
  }
  return out;
}

std::vector<IterationRecord> parse_records_csv(std::string_view text) {
  std::vector<IterationRecord> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text.remove_prefix(end == std::string_view::npos ? text.size() : end + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kRecordsHeader) throw DataError("records CSV header mismatch: expected '" + std::string(kRecordsHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_commas(line);
    if (fields.size() != 6) throw DataError("records CSV line " + std::to_string(line_no) + ": expected 6 fields");
    try {
      IterationRecord r;
      r.iteration = static_cast<int>(parse_double(fields[0]));
      r.mean_nn_distance = parse_double(fields[1]);
      r.mean_projection_norm = parse_double(fields[2]);
      r.train_accuracy = optional_value(fields[3]);
      r.test_accuracy = optional_value(fields[4]);
      r.unconverged_count = static_cast<std::size_t>(parse_double(fields[5]));
      if (!out.empty() && r.iteration <= out.back().iteration)
        throw DataError("iterations must increase strictly");
      out.push_back(std::move(r));
    } catch (const Error& e) {
      throw DataError("records CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw DataError("records CSV is empty");
  if (out.empty()) throw DataError("records CSV has no rows");
  return out;
}

RunOutcome run_iterative_projection(const ExperimentConfig& cfg, bool resume) {
  return run_iterations(cfg, resume, "iterproj", false);
}

RunOutcome run_generalization_tracking(const ExperimentConfig& cfg, bool resume) {
  return run_iterations(cfg, resume, "gentrack", true);
}

TransferReport measure_transfer(const Mlpd& source, const Mlpd& target, const Dataset& source_train,
                                const Dataset& heldout, double kappa, const ProjectorOptions& opts,
                                std::uint64_t seed) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be nonnegative");
  heldout.validate();
  TransferReport report;
  report.kappa = kappa;
  report.source_clean_accuracy = accuracy(source, heldout);
  report.target_clean_accuracy = accuracy(target, heldout);

  const std::vector<std::size_t> eligible = correct_under_both(source, target, heldout);
  std::vector<ProjectionResult> results(eligible.size());
  parallel_for(eligible.size(), [&](std::size_t e) {
    results[e] = project_to_boundary(source, Eigen::VectorXd(heldout.sample(eligible[e])), source_train, opts);
  });

  std::size_t fooled_source = 0, fooled_target = 0, fooled_random = 0;
  for (std::size_t e = 0; e < eligible.size(); ++e) {
    const ProjectionResult& r = results[e];
    if (!r.converged) continue;
    const std::size_t i = eligible[e];
    const int label = heldout.labels[i];
    ++report.crafted;
    const Eigen::VectorXd adversarial = adversarial_overshoot(r, kappa);
    if (!is_correct(margin(source, adversarial), label)) ++fooled_source;
    if (!is_correct(margin(target, adversarial), label)) ++fooled_target;

    SplitMix64 rng(derive_seed(seed, i));
    Eigen::VectorXd direction(r.origin.size());
    do {
      for (Eigen::Index d = 0; d < direction.size(); ++d) direction(d) = rng.normal();
    } while (direction.norm() == 0.0);
    const double length = kappa == 0.0 ? r.distance : (1.0 + kappa) * r.distance;
    const Eigen::VectorXd random_point = r.origin + length * direction.normalized();
    if (!is_correct(margin(target, random_point), label)) ++fooled_random;
  }
  if (report.crafted > 0) {
    const double n = static_cast<double>(report.crafted);
    report.fooling_rate_source = static_cast<double>(fooled_source) / n;
    report.fooling_rate_transfer = static_cast<double>(fooled_target) / n;
    report.fooling_rate_random_baseline = static_cast<double>(fooled_random) / n;
  } else {
    report.valid = false;
    report.note = "no held-out sample produced a converged adversarial";
  }
  return report;
}

TransferReport run_transfer(const ExperimentConfig& cfg) {
  const std::string started = utc_timestamp();
  validate(cfg);
  const DatasetSplit split = build_dataset(cfg.dataset);
  if (!split.test || split.test->size() == 0)
    throw ConfigError("transfer needs a held-out set (dataset.test_size or dataset.test_path)");

  const TransferSettings& ts = cfg.transfer;
  std::vector<int> target_dims = ts.target_dims.empty() ? cfg.dims : ts.target_dims;
  Dataset source_train, target_train;
  if (ts.mode == TransferMode::cross_model) {
    if (ts.target_dims.empty()) throw ConfigError("transfer.target_dims must name the target architecture");
    source_train = target_train = split.train;
  } else {
    std::tie(source_train, target_train) = split_halves(split.train);
  }
  if (target_dims.front() != split.train.dim() || target_dims.back() != 2)
    throw ConfigError("transfer.target_dims must start with the data dimension and end with 2");

  std::vector<Mlpd> nets;
  nets.push_back(init_network<double>(cfg.dims, init_seed(cfg.seed, 1)));
  nets.push_back(init_network<double>(target_dims, init_seed(cfg.seed, 2)));
  const Dataset* sets[2] = {&source_train, &target_train};
  parallel_for(2, [&](std::size_t n) {
    TrainConfig tc = cfg.train;
    tc.seed = shuffle_seed(cfg.seed, static_cast<int>(n) + 1);
    train(nets[n], *sets[n], tc);
  });

  TransferReport report =
      measure_transfer(nets[0], nets[1], source_train, *split.test, ts.kappa, cfg.projector, derive_seed(cfg.seed, 0));
  report.mode = ts.mode;
  if (report.target_clean_accuracy < ts.min_target_accuracy) {
    report.valid = false;
    report.note = "target clean accuracy " + format_double(report.target_clean_accuracy) + " is below " +
                  format_double(ts.min_target_accuracy);
  }
  write_report(cfg, "transfer", "transfer_report.json", to_json(report), started);
  return report;
}

SymmetryReport run_symmetry_experiment(const Dataset& layout, const ExperimentConfig& cfg) {
  validate(cfg);
  layout.validate();
  if (layout.dim() != 2) throw DimensionMismatch("symmetry layouts are planar");
  if (cfg.dims.front() != 2) throw ConfigError("network.dims must start with 2 for planar layouts");
  const int trials = cfg.symmetry.trials;
  const std::size_t points = layout.size();

  struct Trial {
    bool ok = false;
    std::optional<Mlpd> net;
    std::vector<Eigen::Vector2d> directions;
    std::vector<Eigen::VectorXd> adversarials;
  };
  std::vector<Trial> runs(static_cast<std::size_t>(trials));
  parallel_for(runs.size(), [&](std::size_t t) {
    const int index = static_cast<int>(t) + 1;
    Mlpd net = init_network<double>(cfg.dims, init_seed(cfg.seed, index));
    TrainConfig tc = cfg.train;
    tc.seed = shuffle_seed(cfg.seed, index);
    try {
      if (train(net, layout, tc).final_train_accuracy < 1.0) return;
      const ProjectedDataset projected = project_dataset(net, layout, cfg.projector, 1);
      if (projected.unconverged > 0) return;
      Trial& run = runs[t];
      for (const ProjectionResult& r : projected.results) {
        if (!(r.distance > 0.0)) return;
        run.directions.emplace_back(r.vector.normalized());
        run.adversarials.push_back(adversarial_overshoot(r, cfg.symmetry.kappa));
      }
      run.net = std::move(net);
      run.ok = true;
    } catch (const NumericError&) {
      // counted as a failed trial
    }
  });

  SymmetryReport report;
  report.trials = trials;
  report.assignment.assign(runs.size(), -1);
  // Single linkage: trials whose mean per-point cosine reaches the
  // threshold share a cluster, transitively.
  std::vector<std::size_t> parent(runs.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t t) {
    while (parent[t] != t) t = parent[t] = parent[parent[t]];
    return t;
  };
  std::size_t successes = 0;
  for (std::size_t t = 0; t < runs.size(); ++t) {
    if (!runs[t].ok) {
      ++report.failures;
      continue;
    }
    ++successes;
    report.directions.push_back(runs[t].directions);
    for (std::size_t u = 0; u < t; ++u) {
      if (!runs[u].ok) continue;
      double cosine = 0.0;
      for (std::size_t p = 0; p < points; ++p) cosine += runs[u].directions[p].dot(runs[t].directions[p]);
      if (cosine / static_cast<double>(points) >= cfg.symmetry.cluster_cosine) parent[root(t)] = root(u);
    }
  }
  std::vector<int> cluster_of_root(runs.size(), -1);
  for (std::size_t t = 0; t < runs.size(); ++t) {
    if (!runs[t].ok) continue;
    int& cluster = cluster_of_root[root(t)];
    if (cluster < 0) {
      cluster = static_cast<int>(report.cluster_sizes.size());
      report.cluster_sizes.push_back(0);
    }
    ++report.cluster_sizes[static_cast<std::size_t>(cluster)];
    report.assignment[t] = cluster;
  }
  report.cluster_count = report.cluster_sizes.size();
  if (successes > 0)
    report.dominant_share = static_cast<double>(*std::max_element(report.cluster_sizes.begin(), report.cluster_sizes.end())) /
                            static_cast<double>(successes);

  double within = 0.0, cross = 0.0;
  std::size_t within_pairs = 0, cross_pairs = 0;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    if (!runs[a].ok) continue;
    for (std::size_t b = 0; b < runs.size(); ++b) {
      if (a == b || !runs[b].ok) continue;
      std::size_t fooled = 0;
      for (std::size_t p = 0; p < points; ++p)
        if (!is_correct(margin(*runs[b].net, runs[a].adversarials[p]), layout.labels[p])) ++fooled;
      const double rate = static_cast<double>(fooled) / static_cast<double>(points);
      if (report.assignment[a] == report.assignment[b]) {
        within += rate;
        ++within_pairs;
      } else {
        cross += rate;
        ++cross_pairs;
      }
    }
  }
  if (within_pairs > 0) report.within_cluster_transfer = within / static_cast<double>(within_pairs);
  if (cross_pairs > 0) report.cross_cluster_transfer = cross / static_cast<double>(cross_pairs);
  return report;
}

SymmetryReport run_symmetry_experiment(const ExperimentConfig& cfg) {
  const std::string started = utc_timestamp();
  validate(cfg);
  if (cfg.dataset.source != DataSource::layout) throw ConfigError("symmetry needs dataset.source = layout");
  Dataset layout = gen_symmetric_layout(cfg.dataset.layout).data;
  const auto& sym = cfg.symmetry;
  for (std::size_t k = 0; k < sym.perturb_indices.size(); ++k) {
    if (sym.perturb_indices[k] < 0) throw ConfigError("symmetry.perturb_indices must be nonnegative");
    layout = perturb_layout(layout, static_cast<std::size_t>(sym.perturb_indices[k]),
                            Eigen::Vector2d(sym.perturb_shift[2 * k], sym.perturb_shift[2 * k + 1]));
  }
  SymmetryReport report = run_symmetry_experiment(layout, cfg);
  write_report(cfg, "symmetry", "symmetry_report.json", to_json(report), started);
  return report;
}

}  // namespace blab
