#pragma once

#include "blab/boundary.hpp"
#include "blab/data.hpp"
#include "blab/dataset.hpp"
#include "blab/metrics.hpp"
#include "blab/mlp.hpp"
#include "blab/train.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace blab {

inline constexpr int kRunFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum class DataSource { blobs, mnist, csv, layout };

struct DatasetSpec {
  DataSource source = DataSource::blobs;
  std::uint64_t seed = 1;
  /// Balanced held-out samples drawn disjointly from training data (0 = none).
  std::size_t test_size = 0;

  // blobs
  int dim = 2;
  std::size_t per_class = 100;
  std::vector<double> center0{0.0, 0.0};
  std::vector<double> center1{4.0, 0.0};
  double sigma = 0.5;

  // mnist (IDX pair)
  std::string images;
  std::string labels;
  int class_a = 3;
  int class_b = 5;
  std::size_t subset = 400;

  // csv
  std::string path;
  std::string test_path;

  // layout
  LayoutKind layout = LayoutKind::square_xor;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

enum class TransferMode { cross_model, cross_training_set };

struct TransferSettings {
  TransferMode mode = TransferMode::cross_training_set;
  double kappa = 0.1;
  /// Architecture of the target network; empty reuses the source dims.
  std::vector<int> target_dims;
  /// Minimum clean held-out accuracy of the target for a valid report.
  double min_target_accuracy = 0.9;

  friend bool operator==(const TransferSettings&, const TransferSettings&) = default;
};

struct SymmetrySettings {
  int trials = 20;
  double kappa = 0.1;
  /// Two trials are linked when the mean cosine between their per-point
  /// projection directions reaches this value; clusters are the connected
  /// groups of linked trials.
  double cluster_cosine = 0.9;
  /// Layout points to move; perturb_shift holds one (dx, dy) pair per index.
  std::vector<int> perturb_indices;
  std::vector<double> perturb_shift;

  friend bool operator==(const SymmetrySettings&, const SymmetrySettings&) = default;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<int> dims{2, 32, 32, 2};
  TrainConfig train;
  ProjectorOptions projector;
  int iterations = 5;
  std::uint64_t seed = 1;
  /// Abort when more than this fraction of samples fails to project.
  double abort_fraction = 0.1;
  double cosine_threshold = 0.95;
  std::string output;
  TransferSettings transfer;
  SymmetrySettings symmetry;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

void validate(const ExperimentConfig& cfg);

struct DatasetSplit {
  Dataset train;
  std::optional<Dataset> test;
};

/// Materializes the configured dataset (training subset plus optional
/// disjoint held-out set). Throws DataError for unreadable inputs.
DatasetSplit build_dataset(const DatasetSpec& spec);

struct IterationRecord {
  int iteration = 0;
  double mean_nn_distance = 0.0;
  double mean_projection_norm = 0.0;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  std::size_t unconverged_count = 0;
  int epochs_run = 0;
  std::string stopped_reason;
  /// Training samples the iteration's network misclassified; they are
  /// carried over unprojected.
  std::size_t misclassified_count = 0;
  /// Global-difference estimate of this iteration's classifier, scored with
  /// the next iteration's network as the separator of the projected set.
  std::optional<double> global_difference;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Seeds of iteration k: network initialization and batch shuffling.
std::uint64_t init_seed(std::uint64_t master, int iteration);
std::uint64_t shuffle_seed(std::uint64_t master, int iteration);

struct RunOutcome {
  std::vector<IterationRecord> records;
  /// Iterations executed by this call (0 when resuming a finished run).
  int iterations_executed = 0;
  bool resumed = false;
};

/// Iterative projection: each iteration trains a freshly seeded network on
/// the working set, replaces the correctly classified samples by their
/// boundary projections and records the nearest-opposite mean distance. Record 0 describes the
/// raw set. With cfg.output set, the run directory holds manifest.json,
/// records.csv, checkpoints/iter_<k>.blab, projections/iter_<k>.csv and
/// datasets/iter_<k>.csv, and `resume` continues an existing run.
/// Throws DivergenceError / ProjectionFailure / NumericError after writing
/// the partial results.
RunOutcome run_iterative_projection(const ExperimentConfig& cfg, bool resume = false);

/// As run_iterative_projection, but requires a held-out test set; every
/// record from iteration 1 on carries its network's test accuracy.
RunOutcome run_generalization_tracking(const ExperimentConfig& cfg, bool resume = false);

struct TransferReport {
  TransferMode mode = TransferMode::cross_training_set;
  double kappa = 0.0;
  double fooling_rate_transfer = 0.0;
  double fooling_rate_source = 0.0;
  double fooling_rate_random_baseline = 0.0;
  double source_clean_accuracy = 0.0;
  double target_clean_accuracy = 0.0;
  std::size_t crafted = 0;
  bool valid = true;
  std::string note;
};

/// Crafts overshoot adversarials from the source network's projections of
/// the held-out samples both networks classify correctly, and measures how
/// often they fool each network and how often equal-norm random
/// displacements fool the target.
TransferReport measure_transfer(const Mlpd& source, const Mlpd& target, const Dataset& source_train,
                                const Dataset& heldout, double kappa, const ProjectorOptions& opts,
                                std::uint64_t seed);

TransferReport run_transfer(const ExperimentConfig& cfg);

struct SymmetryReport {
  int trials = 0;
  int failures = 0;
  std::size_t cluster_count = 0;
  std::vector<std::size_t> cluster_sizes;
  /// Cluster id per trial (-1 for failed trials).
  std::vector<int> assignment;
  double dominant_share = 0.0;
  /// Mean fooling rate over ordered pairs of distinct trials.
  std::optional<double> within_cluster_transfer;
  std::optional<double> cross_cluster_transfer;
  std::vector<std::vector<Eigen::Vector2d>> directions;
};

/// Trains `trials` independently seeded networks on a planar layout,
/// clusters them by their projection directions and compares adversarial
/// transfer within and across clusters.
SymmetryReport run_symmetry_experiment(const Dataset& layout, const ExperimentConfig& cfg);

SymmetryReport run_symmetry_experiment(const ExperimentConfig& cfg);

std::string_view to_string(DataSource source);
std::string_view to_string(TransferMode mode);
DataSource parse_data_source(std::string_view name);
TransferMode parse_transfer_mode(std::string_view name);

/// records.csv: iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count
std::string format_records_csv(const std::vector<IterationRecord>& records);
std::vector<IterationRecord> parse_records_csv(std::string_view text);

}  // namespace blab
