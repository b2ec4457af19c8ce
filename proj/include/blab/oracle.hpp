#pragma once

// Network-free ground truth: closed-form and brute-force boundary
// projections, and numeric checks of the inequality chain behind the
// uniqueness argument for non-symmetric datasets.

#include "blab/data.hpp"
#include "blab/mlp.hpp"
#include "blab/rng.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace blab {

/// x - ((w.x + b) / |w|^2) w.
Eigen::VectorXd halfspace_projection(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x);

struct GridBounds {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
};

/// Scalar field on the plane evaluated a row of points at a time.
using PlanarField = std::function<Eigen::VectorXd(const Eigen::Matrix2Xd&)>;

PlanarField planar_field(std::function<double(const Eigen::Vector2d&)> scalar);
PlanarField planar_field(const Mlpd& net);

/// Zero crossings of a planar field found by scanning a regular grid for
/// sign changes between 4-neighbours; each crossing edge is sub-resolved by
/// bisection.
class GridBoundary {
 public:
  GridBoundary(const PlanarField& field, const GridBounds& bounds, double step);

  const std::vector<Eigen::Vector2d>& crossings() const noexcept { return crossings_; }

  /// Nearest crossing to x; throws NumericError when the scan found none.
  std::pair<Eigen::Vector2d, double> nearest(const Eigen::Vector2d& x) const;

 private:
  std::vector<Eigen::Vector2d> crossings_;
};

struct GridProjection {
  Eigen::Vector2d point;
  double distance = 0.0;
};

/// Brute-force nearest boundary point of `field` to x within `bounds`.
GridProjection grid_boundary_projection(const PlanarField& field, const Eigen::Vector2d& x, const GridBounds& bounds,
                                        double step);

/// a/b + b/a for positive a, b.
double ratio_bound(double a, double b);

/// Points with per-point projection vectors attributed to two classifiers.
struct VectorProjectionInstance {
  std::vector<Eigen::VectorXd> points;
  std::vector<int> labels;
  std::vector<Eigen::VectorXd> f_vectors;
  std::vector<Eigen::VectorXd> g_vectors;

  void validate() const;
};

struct StepViolation {
  std::string step;
  std::size_t i = 0;
  std::size_t j = 0;
  double slack = 0.0;
};

/// Claim 1 chain, for every opposite-label pair (i, j):
///   precondition  |f_i| + |f_j| <= |x_i - x_j| and likewise for g
///   strictness    (orthogonal f, g) at least one of the two is strict
///   averaging     (|f_i| + |g_i|)/2 + (|f_j| + |g_j|)/2 < |x_i - x_j|
///   triangle      |(f_i + g_i)/2| <= (|f_i| + |g_i|)/2  (unconditional)
///   midpoint      |(f_i + g_i)/2| + |(f_j + g_j)/2| < |x_i - x_j|
/// Without pointwise orthogonality only the triangle step is checked and
/// the chain is reported vacuous.
struct Claim1Report {
  bool orthogonal = false;
  bool preconditions_hold = true;
  bool vacuous = false;
  std::size_t pairs_checked = 0;
  double min_averaging_slack = 0.0;
  double min_triangle_slack = 0.0;
  std::vector<StepViolation> violations;

  bool passed() const noexcept { return violations.empty(); }
};

Claim1Report check_claim1_chain(const VectorProjectionInstance& instance);

/// Claim 2 product comparison with h_i = (f_i + g_i)/2. Products are
/// compared through log sums.
struct Claim2Report {
  bool orthogonal = false;
  bool products_equal = false;   // prod |f| == prod |g| (relative 1e-9)
  bool strict_holds = false;     // prod |h| > prod |f|
  bool equality = false;         // prod |h| == prod |f| (relative 1e-9)
  bool counterexample = false;   // premises hold but the strict inequality fails
  double log_product_f = 0.0;
  double log_product_g = 0.0;
  double log_product_h = 0.0;
  std::size_t subsets_checked = 0;
  double min_ratio_bound = 0.0;
  bool ratio_substep_ok = true;  // a/b + b/a >= 2 - 1e-12 on every subset

  bool passed() const noexcept { return !counterexample && ratio_substep_ok; }
};

inline constexpr std::size_t kSubsetCap = 12;

Claim2Report check_claim2_product(const VectorProjectionInstance& instance);

/// Random instance with orthogonal f/g vectors of equal norm and strict
/// slack (norms at most `slack_factor` of half the smallest opposite-label
/// distance). With `tight_pair`, the closest opposite pair gets f-vectors
/// that meet at the midpoint of their segment (equality in the f
/// precondition) and shorter orthogonal g-vectors.
VectorProjectionInstance random_claim1_instance(SplitMix64& rng, std::size_t points, Eigen::Index dim,
                                                bool tight_pair = false, double slack_factor = 0.95);

/// Two-point instance with orthogonal, equal-norm f and g vectors.
VectorProjectionInstance orthogonal_counterexample_instance();

/// Same points with g = f (h = f).
VectorProjectionInstance collinear_equality_instance();

/// Projection sets of a square_xor-family layout onto each diagonal
/// boundary (x1 = x2 and x1 = -x2) whose total projection distance is
/// minimal within `tie_tolerance`. Throws InvalidArgument for other kinds.
std::vector<std::vector<Eigen::Vector2d>> enumerate_square_xor_projections(const SymmetricLayout& layout,
                                                                           double tie_tolerance = 1e-9);

}  // namespace blab
