#include "blab/oracle.hpp"

#include "blab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blab {

Eigen::VectorXd halfspace_projection(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x) {
  if (w.size() != x.size()) throw DimensionMismatch("halfspace normal and point differ in dimension");
  const double norm2 = w.squaredNorm();
  if (!(norm2 > 0.0)) throw InvalidArgument("halfspace normal must be nonzero");
  return x - ((w.dot(x) + b) / norm2) * w;
}

PlanarField planar_field(std::function<double(const Eigen::Vector2d&)> scalar) {
  return [scalar = std::move(scalar)](const Eigen::Matrix2Xd& points) {
    Eigen::VectorXd out(points.cols());
    for (Eigen::Index k = 0; k < points.cols(); ++k) out(k) = scalar(points.col(k));
    return out;
  };
}

PlanarField planar_field(const Mlpd& net) {
  if (net.input_dim() != 2) throw DimensionMismatch("planar field needs a 2-input network");
  return [net](const Eigen::Matrix2Xd& points) -> Eigen::VectorXd {
    const Eigen::MatrixXd logits = forward_batch(net, points);
    return (logits.row(1) - logits.row(0)).transpose();
  };
}

namespace {

bool straddles(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

Eigen::Vector2d resolve_edge(const PlanarField& field, Eigen::Vector2d lo, Eigen::Vector2d hi, double lo_value) {
  Eigen::Matrix2Xd probe(2, 1);
  for (int k = 0; k < 40; ++k) {
    probe.col(0) = 0.5 * (lo + hi);
    const double value = field(probe)(0);
    if (value == 0.0) return probe.col(0);
    if (straddles(value, lo_value)) {
      hi = probe.col(0);
    } else {
      lo = probe.col(0);
      lo_value = value;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

GridBoundary::GridBoundary(const PlanarField& field, const GridBounds& bounds, double step) {
  if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) throw InvalidArgument("empty grid bounds");
  const auto nx = static_cast<Eigen::Index>(std::floor((bounds.x_max - bounds.x_min) / step + 1e-9)) + 1;
  const auto ny = static_cast<Eigen::Index>(std::floor((bounds.y_max - bounds.y_min) / step + 1e-9)) + 1;
  Eigen::Matrix2Xd row(2, nx);
  for (Eigen::Index k = 0; k < nx; ++k) row(0, k) = bounds.x_min + static_cast<double>(k) * step;
  Eigen::VectorXd previous;
  for (Eigen::Index j = 0; j < ny; ++j) {
    const double y = bounds.y_min + static_cast<double>(j) * step;
    row.row(1).setConstant(y);
    const Eigen::VectorXd values = field(row);
    for (Eigen::Index k = 0; k < nx; ++k) {
      if (values(k) == 0.0) crossings_.push_back(row.col(k));
      if (k + 1 < nx && straddles(values(k), values(k + 1)))
        crossings_.push_back(resolve_edge(field, row.col(k), row.col(k + 1), values(k)));
      if (j > 0 && straddles(previous(k), values(k))) {
        const Eigen::Vector2d below(row(0, k), y - step);
        crossings_.push_back(resolve_edge(field, below, row.col(k), previous(k)));
      }
    }
    previous = values;
  }
}

std::pair<Eigen::Vector2d, double> GridBoundary::nearest(const Eigen::Vector2d& x) const {
  if (crossings_.empty()) throw NumericError("no sign change inside the grid bounds");
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d point = crossings_.front();
  for (const auto& c : crossings_) {
    const double d = (c - x).norm();
    if (d < best) {
      best = d;
      point = c;
    }
  }
  return {point, best};
}

GridProjection grid_boundary_projection(const PlanarField& field, const Eigen::Vector2d& x, const GridBounds& bounds,
                                        double step) {
  if (x.x() < bounds.x_min || x.x() > bounds.x_max || x.y() < bounds.y_min || x.y() > bounds.y_max)
    throw InvalidArgument("grid bounds must contain the query point");
  const auto [point, distance] = GridBoundary(field, bounds, step).nearest(x);
  return {point, distance};
}

double ratio_bound(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("ratio_bound needs positive arguments");
  return a / b + b / a;
}

void VectorProjectionInstance::validate() const {
  const std::size_t s = points.size();
  if (s == 0) throw InvalidArgument("instance has no points");
  if (labels.size() != s || f_vectors.size() != s || g_vectors.size() != s)
    throw InvalidArgument("instance lists must have equal lengths");
  const Eigen::Index dim = points.front().size();
  for (std::size_t i = 0; i < s; ++i) {
    if (points[i].size() != dim || f_vectors[i].size() != dim || g_vectors[i].size() != dim)
      throw DimensionMismatch("instance vectors must share the point dimension");
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("instance labels must be 0 or 1");
  }
}

namespace {

constexpr double kSlackTolerance = 1e-12;

bool pointwise_orthogonal(const VectorProjectionInstance& instance) {
  for (std::size_t i = 0; i < instance.points.size(); ++i) {
    const double fn = instance.f_vectors[i].norm();
    const double gn = instance.g_vectors[i].norm();
    if (fn == 0.0 || gn == 0.0) return false;
    if (std::abs(instance.f_vectors[i].dot(instance.g_vectors[i])) > 1e-9 * fn * gn) return false;
  }
  return true;
}

}  // namespace

Claim1Report check_claim1_chain(const VectorProjectionInstance& instance) {
  instance.validate();
  Claim1Report report;
  report.orthogonal = pointwise_orthogonal(instance);
  report.vacuous = !report.orthogonal;
  report.min_averaging_slack = std::numeric_limits<double>::infinity();
  report.min_triangle_slack = std::numeric_limits<double>::infinity();
  const std::size_t s = instance.points.size();
  const auto& f = instance.f_vectors;
  const auto& g = instance.g_vectors;

  for (std::size_t i = 0; i < s; ++i) {
    const double slack = 0.5 * (f[i].norm() + g[i].norm()) - (0.5 * (f[i] + g[i])).norm();
    report.min_triangle_slack = std::min(report.min_triangle_slack, slack);
    if (slack < -kSlackTolerance) report.violations.push_back({"triangle", i, i, slack});
  }

  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) {
      if (instance.labels[i] == instance.labels[j]) continue;
      ++report.pairs_checked;
      const double gap = (instance.points[i] - instance.points[j]).norm();
      const double f_slack = gap - (f[i].norm() + f[j].norm());
      const double g_slack = gap - (g[i].norm() + g[j].norm());
      if (f_slack < -kSlackTolerance || g_slack < -kSlackTolerance) {
        report.preconditions_hold = false;
        report.violations.push_back({"precondition", i, j, std::min(f_slack, g_slack)});
        continue;
      }
      if (!report.orthogonal) continue;
      if (std::max(f_slack, g_slack) <= kSlackTolerance)
        report.violations.push_back({"strictness", i, j, std::max(f_slack, g_slack)});
      const double averaging = gap - 0.5 * (f[i].norm() + g[i].norm()) - 0.5 * (f[j].norm() + g[j].norm());
      report.min_averaging_slack = std::min(report.min_averaging_slack, averaging);
      if (averaging <= 0.0) report.violations.push_back({"averaging", i, j, averaging});
      const double midpoint = gap - (0.5 * (f[i] + g[i])).norm() - (0.5 * (f[j] + g[j])).norm();
      if (midpoint <= 0.0) report.violations.push_back({"midpoint", i, j, midpoint});
    }
  }
  return report;
}

Claim2Report check_claim2_product(const VectorProjectionInstance& instance) {
  instance.validate();
  Claim2Report report;
  report.orthogonal = pointwise_orthogonal(instance);
  const std::size_t s = instance.points.size();
  std::vector<double> log_f(s);
  std::vector<double> log_g(s);
  for (std::size_t i = 0; i < s; ++i) {
    const double fn = instance.f_vectors[i].norm();
    const double gn = instance.g_vectors[i].norm();
    const double hn = (0.5 * (instance.f_vectors[i] + instance.g_vectors[i])).norm();
    if (!(fn > 0.0) || !(gn > 0.0) || !(hn > 0.0))
      throw InvalidArgument("claim 2 needs nonzero projection vectors (index " + std::to_string(i) + ")");
    log_f[i] = std::log(fn);
    log_g[i] = std::log(gn);
    report.log_product_f += log_f[i];
    report.log_product_g += log_g[i];
    report.log_product_h += std::log(hn);
  }
  // A relative tolerance of 1e-9 on the products is an absolute one on logs.
  constexpr double kLogTolerance = 1e-9;
  report.products_equal = std::abs(report.log_product_f - report.log_product_g) <= kLogTolerance;
  report.equality = std::abs(report.log_product_h - report.log_product_f) <= kLogTolerance;
  report.strict_holds = report.log_product_h > report.log_product_f + kLogTolerance;
  report.counterexample = report.orthogonal && report.products_equal && !report.strict_holds;

  const std::size_t width = std::min(s, kSubsetCap);
  report.min_ratio_bound = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << width); ++mask) {
    double log_a = 0.0;
    double log_b = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
      if (mask & (1u << k)) {
        log_a += log_g[k];
        log_b += log_f[k];
      }
    }
    const double value = ratio_bound(std::exp(log_a - log_b), 1.0);
    report.min_ratio_bound = std::min(report.min_ratio_bound, value);
    ++report.subsets_checked;
    if (value < 2.0 - 1e-12) report.ratio_substep_ok = false;
  }
  return report;
}

namespace {

Eigen::VectorXd random_direction(SplitMix64& rng, Eigen::Index dim) {
  Eigen::VectorXd v(dim);
  do {
    for (Eigen::Index d = 0; d < dim; ++d) v(d) = rng.normal();
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Eigen::VectorXd orthogonal_direction(SplitMix64& rng, const Eigen::VectorXd& to) {
  const Eigen::VectorXd unit = to.normalized();
  Eigen::VectorXd v;
  do {
    v = random_direction(rng, to.size());
    v -= v.dot(unit) * unit;
  } while (v.norm() < 1e-3);
  v.normalize();
  // One more pass removes the rounding residue of the first projection.
  v -= v.dot(unit) * unit;
  return v.normalized();
}

}  // namespace

VectorProjectionInstance random_claim1_instance(SplitMix64& rng, std::size_t points, Eigen::Index dim,
                                                bool tight_pair, double slack_factor) {
  if (points < 2 || dim < 2) throw InvalidArgument("claim instances need at least 2 points in 2 dimensions");
  if (!(slack_factor > 0.0 && slack_factor < 1.0)) throw InvalidArgument("slack_factor must lie in (0, 1)");
  VectorProjectionInstance out;
  for (std::size_t i = 0; i < points; ++i) {
    Eigen::VectorXd p(dim);
    for (Eigen::Index d = 0; d < dim; ++d) p(d) = rng.uniform(-3.0, 3.0);
    out.points.push_back(std::move(p));
    out.labels.push_back(static_cast<int>(i % 2));
  }
  double closest = std::numeric_limits<double>::infinity();
  std::size_t ci = 0;
  std::size_t cj = 1;
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = i + 1; j < points; ++j) {
      if (out.labels[i] == out.labels[j]) continue;
      const double d = (out.points[i] - out.points[j]).norm();
      if (d < closest) {
        closest = d;
        ci = i;
        cj = j;
      }
    }
  for (std::size_t i = 0; i < points; ++i) {
    const double radius = slack_factor * 0.5 * closest * rng.uniform(0.05, 1.0);
    Eigen::VectorXd f = radius * random_direction(rng, dim);
    Eigen::VectorXd g = radius * orthogonal_direction(rng, f);
    out.f_vectors.push_back(std::move(f));
    out.g_vectors.push_back(std::move(g));
  }
  if (tight_pair) {
    const Eigen::VectorXd half = 0.5 * (out.points[cj] - out.points[ci]);
    out.f_vectors[ci] = half;
    out.f_vectors[cj] = -half;
    const double radius = slack_factor * half.norm();
    out.g_vectors[ci] = radius * orthogonal_direction(rng, half);
    out.g_vectors[cj] = radius * orthogonal_direction(rng, half);
  }
  return out;
}

VectorProjectionInstance orthogonal_counterexample_instance() {
  VectorProjectionInstance out;
  out.points = {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(4.0, 0.0)};
  out.labels = {0, 1};
  out.f_vectors = {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(-1.0, 0.0)};
  out.g_vectors = {Eigen::Vector2d(0.0, 1.0), Eigen::Vector2d(0.0, -1.0)};
  return out;
}

VectorProjectionInstance collinear_equality_instance() {
  VectorProjectionInstance out = orthogonal_counterexample_instance();
  out.g_vectors = out.f_vectors;
  return out;
}

std::vector<std::vector<Eigen::Vector2d>> enumerate_square_xor_projections(const SymmetricLayout& layout,
                                                                           double tie_tolerance) {
  if (layout.kind != LayoutKind::square_xor)
    throw InvalidArgument("projection enumeration supports the square_xor layout only");
  if (layout.data.dim() != 2) throw DimensionMismatch("square_xor layouts are planar");
  const Eigen::Vector2d normals[] = {Eigen::Vector2d(1.0, -1.0), Eigen::Vector2d(1.0, 1.0)};
  std::vector<std::pair<double, std::vector<Eigen::Vector2d>>> candidates;
  for (const auto& normal : normals) {
    std::vector<Eigen::Vector2d> points;
    double total = 0.0;
    for (std::size_t i = 0; i < layout.data.size(); ++i) {
      const Eigen::Vector2d x = layout.data.sample(i);
      const Eigen::Vector2d p = halfspace_projection(normal, 0.0, x);
      total += (p - x).norm();
      points.push_back(p);
    }
    candidates.emplace_back(total, std::move(points));
  }
  const double best = std::min(candidates[0].first, candidates[1].first);
  std::vector<std::vector<Eigen::Vector2d>> assignments;
  for (auto& [total, points] : candidates)
    if (total <= best + tie_tolerance) assignments.push_back(std::move(points));
  return assignments;
}

}  // namespace blab
