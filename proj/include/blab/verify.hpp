#pragma once

// Property suites behind `blab verify` and the acceptance binary.

#include "blab/oracle.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace blab {

struct CaseOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
  /// Failing input, serialized for replay (null when passing).
  nlohmann::json replay;
};

struct SuiteReport {
  std::string suite;
  std::vector<CaseOutcome> cases;

  bool passed() const;
  std::size_t pass_count() const;
};

struct OracleSuiteOptions {
  int networks = 10;
  int points_per_network = 5;
  double grid_step = 1e-3;
  double relative_tolerance = 0.02;
  int linear_cases = 20;
  double linear_tolerance = 1e-3;
  /// Segment candidates for the trained networks; 0 tries every
  /// opposite-side sample, which covers non-convex class regions.
  int segment_candidates = 0;
  std::uint64_t seed = 1;
};

/// Solver against brute force: trained planar networks checked against a
/// grid scan of the window that must contain any closer boundary point, and
/// linear networks against the closed-form halfspace projection.
SuiteReport run_oracle_suite(const OracleSuiteOptions& opts = {});

struct ClaimsSuiteOptions {
  int claim1_instances = 1000;
  int ratio_pairs = 100000;
  /// Adds a case asserting the strict product inequality on the orthogonal
  /// equal-norm instance; it fails by design.
  bool assert_strict_on_counterexample = false;
  std::uint64_t seed = 1;
};

SuiteReport run_claims_suite(const ClaimsSuiteOptions& opts = {});

SuiteReport run_gradients_suite(int cases = 100, std::uint64_t seed = 1);

/// Fixed-width pass/fail table with a summary line.
std::string format_suite_table(const SuiteReport& report);

nlohmann::json to_json(const VectorProjectionInstance& instance);
VectorProjectionInstance instance_from_json(const nlohmann::json& j);

/// Planar dataset of four clusters at (+-1, +-1) labelled by the sign of
/// x1 * x2 (label 1 when positive).
Dataset gen_xor_quadrants(std::size_t per_cluster, double sigma, std::uint64_t seed);

}  // namespace blab
