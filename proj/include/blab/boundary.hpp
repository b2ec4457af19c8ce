#pragma once

#include "blab/dataset.hpp"
#include "blab/errors.hpp"
#include "blab/mlp.hpp"
#include "blab/parallel.hpp"
#include "blab/train.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace blab {

/// Anything with a scalar margin and its input gradient, found by ADL:
/// `margin(model, x)` and `grad_input(model, x)`.
template <typename M>
concept MarginField = requires(const M& model, const Eigen::VectorXd& x) {
  { margin(model, x) } -> std::convertible_to<double>;
  { grad_input(model, x) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Affine margin w.x + b; its boundary is a hyperplane.
struct AffineMargin {
  Eigen::VectorXd weights;
  double offset = 0.0;
};

inline double margin(const AffineMargin& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size()) throw DimensionMismatch("affine margin dimension mismatch");
  return model.weights.dot(x) + model.offset;
}

inline Eigen::VectorXd grad_input(const AffineMargin& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size()) throw DimensionMismatch("affine margin dimension mismatch");
  return model.weights;
}

enum class ProjectionMethod { newton_refine, segment_bisection, combined };

inline const char* to_string(ProjectionMethod method) {
  switch (method) {
    case ProjectionMethod::newton_refine: return "newton_refine";
    case ProjectionMethod::segment_bisection: return "segment_bisection";
    case ProjectionMethod::combined: return "combined";
  }
  return "unknown";
}

struct ProjectorOptions {
  /// Converged points satisfy |margin| <= boundary_tolerance (raw margin units).
  double boundary_tolerance = 1e-6;
  int max_newton_steps = 200;
  int max_refine_steps = 500;
  /// Refinement stops once an iteration improves the distance by less.
  double refine_tolerance = 1e-9;
  double overshoot_kappa = 0.0;
  /// Longest single root-seeking step.
  double max_step = 1.0;
  int max_bisection_steps = 200;
  /// Opposite-class samples (nearest first) tried by the segment candidate;
  /// 0 tries all of them.
  int segment_candidates = 1;

  friend bool operator==(const ProjectorOptions&, const ProjectorOptions&) = default;
};

inline void validate(const ProjectorOptions& opts) {
  if (!(opts.boundary_tolerance > 0.0)) throw InvalidArgument("boundary_tolerance must be positive");
  if (!(opts.refine_tolerance > 0.0)) throw InvalidArgument("refine_tolerance must be positive");
  if (!(opts.max_step > 0.0)) throw InvalidArgument("max_step must be positive");
  if (opts.max_newton_steps < 1 || opts.max_bisection_steps < 1 || opts.max_refine_steps < 0)
    throw InvalidArgument("solver step caps must be positive");
  if (!(opts.overshoot_kappa >= 0.0)) throw InvalidArgument("overshoot_kappa must be nonnegative");
  if (opts.segment_candidates < 0) throw InvalidArgument("segment_candidates must be nonnegative");
}

struct ProjectionResult {
  Eigen::VectorXd origin;
  /// Boundary point b.
  Eigen::VectorXd point;
  /// b - origin.
  Eigen::VectorXd vector;
  double distance = 0.0;
  /// |margin(b)|.
  double residual = 0.0;
  bool converged = false;
  int solver_iterations = 0;
  ProjectionMethod method = ProjectionMethod::newton_refine;
};

namespace detail {

inline ProjectionResult make_result(const Eigen::VectorXd& origin, Eigen::VectorXd point, double margin_value,
                                    bool converged, int iterations, ProjectionMethod method) {
  ProjectionResult r;
  r.origin = origin;
  r.vector = point - origin;
  r.point = std::move(point);
  r.distance = r.vector.norm();
  r.residual = std::abs(margin_value);
  r.converged = converged;
  r.solver_iterations = iterations;
  r.method = method;
  return r;
}

inline bool opposite_signs(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }

}  // namespace detail

struct SegmentCrossing {
  Eigen::VectorXd point;
  double margin = 0.0;
  /// Position on the segment, point = from + t (to - from).
  double t = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

template <MarginField M>
SegmentCrossing bisect_known(const M& model, const Eigen::VectorXd& from, const Eigen::VectorXd& to,
                             double from_margin, double to_margin, double tol, int max_steps) {
  double lo = 0.0;
  double hi = 1.0;
  double lo_margin = from_margin;
  double hi_margin = to_margin;
  const Eigen::VectorXd span = to - from;
  for (int step = 1; step <= max_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    Eigen::VectorXd point = from + mid * span;
    const double value = margin(model, point);
    if (!std::isfinite(value)) throw NumericError("non-finite margin during bisection");
    if (std::abs(value) <= tol) return {std::move(point), value, mid, step, true};
    if (opposite_signs(value, lo_margin)) {
      hi = mid;
      hi_margin = value;
    } else {
      lo = mid;
      lo_margin = value;
    }
  }
  const bool take_lo = std::abs(lo_margin) <= std::abs(hi_margin);
  const double t = take_lo ? lo : hi;
  return {from + t * span, take_lo ? lo_margin : hi_margin, t, max_steps, false};
}

}  // namespace detail

/// Binary search on the segment [x, y] for a point with |margin| <= tol.
/// Throws InvalidArgument when both endpoints lie strictly on the same side.
template <MarginField M>
SegmentCrossing bisect_along_segment(const M& model, const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol,
                                     int max_steps = 200) {
  if (x.size() != y.size()) throw DimensionMismatch("segment endpoints differ in dimension");
  if (!(tol > 0.0)) throw InvalidArgument("bisection tolerance must be positive");
  const double mx = margin(model, x);
  const double my = margin(model, y);
  if (std::abs(mx) <= tol) return {x, mx, 0.0, 0, true};
  if (std::abs(my) <= tol) return {y, my, 1.0, 0, true};
  if (!detail::opposite_signs(mx, my)) throw InvalidArgument("segment endpoints have the same margin sign");
  return detail::bisect_known(model, x, y, mx, my, tol, max_steps);
}

/// Root seeking x <- x - margin(x) g / |g|^2 with steps capped at
/// opts.max_step. When the sign flips between consecutive iterates the
/// bracketing segment is bisected. Throws StallError on a vanishing
/// gradient away from the boundary.
template <MarginField M>
ProjectionResult hit_boundary(const M& model, const Eigen::VectorXd& x, const ProjectorOptions& opts) {
  validate(opts);
  const double tol = opts.boundary_tolerance;
  const double start_margin = margin(model, x);
  if (!std::isfinite(start_margin)) throw NumericError("non-finite margin at the start point");
  if (std::abs(start_margin) <= tol)
    return detail::make_result(x, x, start_margin, true, 0, ProjectionMethod::newton_refine);

  Eigen::VectorXd current = x;
  double current_margin = start_margin;
  for (int iteration = 1; iteration <= opts.max_newton_steps; ++iteration) {
    const Eigen::VectorXd gradient = grad_input(model, current);
    const double norm2 = gradient.squaredNorm();
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw StallError("margin gradient vanishes at a point off the boundary");
    Eigen::VectorXd step = (-current_margin / norm2) * gradient;
    const double length = step.norm();
    if (length > opts.max_step) step *= opts.max_step / length;
    Eigen::VectorXd next = current + step;
    const double next_margin = margin(model, next);
    if (!std::isfinite(next_margin)) throw NumericError("non-finite margin during root seeking");
    if (std::abs(next_margin) <= tol)
      return detail::make_result(x, std::move(next), next_margin, true, iteration, ProjectionMethod::newton_refine);
    if (detail::opposite_signs(next_margin, start_margin)) {
      SegmentCrossing crossing =
          detail::bisect_known(model, current, next, current_margin, next_margin, tol, opts.max_bisection_steps);
      return detail::make_result(x, std::move(crossing.point), crossing.margin, crossing.converged,
                                 iteration + crossing.iterations, ProjectionMethod::newton_refine);
    }
    current = std::move(next);
    current_margin = next_margin;
  }
  return detail::make_result(x, std::move(current), current_margin, false, opts.max_newton_steps,
                             ProjectionMethod::newton_refine);
}

/// Tangent-plane refinement of a converged boundary point: move toward the
/// projection of the origin onto the tangent plane at the current point,
/// return to the boundary, and keep the move only if the distance drops by
/// at least opts.refine_tolerance. The distance is non-increasing; each
/// accepted distance is appended to `trace` when given.
template <MarginField M>
ProjectionResult refine_on_boundary(const M& model, ProjectionResult start, const ProjectorOptions& opts,
                                    std::vector<double>* trace = nullptr) {
  if (!start.converged) return start;
  ProjectionResult best = std::move(start);
  if (trace) trace->push_back(best.distance);
  static constexpr double kDamping[] = {1.0, 0.5, 0.25, 0.125, 0.0625};
  for (int iteration = 0; iteration < opts.max_refine_steps; ++iteration) {
    const Eigen::VectorXd gradient = grad_input(model, best.point);
    const double norm2 = gradient.squaredNorm();
    if (!(norm2 > 0.0)) break;
    const Eigen::VectorXd toward = best.origin - best.point;
    const Eigen::VectorXd tangent = toward - (toward.dot(gradient) / norm2) * gradient;
    if (tangent.norm() < opts.refine_tolerance) break;
    bool accepted = false;
    for (double damping : kDamping) {
      ProjectionResult hit;
      try {
        hit = hit_boundary(model, Eigen::VectorXd(best.point + damping * tangent), opts);
      } catch (const StallError&) {
        continue;
      }
      if (!hit.converged) continue;
      const double distance = (hit.point - best.origin).norm();
      if (distance < best.distance - opts.refine_tolerance) {
        const int iterations = best.solver_iterations + hit.solver_iterations + 1;
        best = detail::make_result(best.origin, std::move(hit.point), hit.residual, true, iterations, best.method);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (trace) trace->push_back(best.distance);
  }
  return best;
}

/// Nearest boundary point estimate. Candidates: (1) root seeking from x
/// followed by tangent refinement, (2) the closest segment crossing toward
/// opposite-side samples of `data`, (3) candidate 2 refined. The smallest
/// converged distance wins; ties favor candidate 1. Segment crossings are
/// always bisected from the negative-margin end, so a pair of samples
/// shares one crossing point.
template <MarginField M>
ProjectionResult project_to_boundary(const M& model, const Eigen::VectorXd& x, const Dataset& data,
                                     const ProjectorOptions& opts) {
  validate(opts);
  const double tol = opts.boundary_tolerance;
  const double x_margin = margin(model, x);
  if (!std::isfinite(x_margin)) throw NumericError("non-finite margin at the projected point");
  if (std::abs(x_margin) <= tol) return detail::make_result(x, x, x_margin, true, 0, ProjectionMethod::newton_refine);

  std::optional<ProjectionResult> best;
  auto consider = [&](ProjectionResult candidate) {
    if (!best) {
      best = std::move(candidate);
      return;
    }
    if (candidate.converged && !best->converged) {
      best = std::move(candidate);
    } else if (candidate.converged == best->converged && candidate.distance < best->distance) {
      best = std::move(candidate);
    }
  };

  try {
    ProjectionResult hit = hit_boundary(model, x, opts);
    consider(refine_on_boundary(model, std::move(hit), opts));
  } catch (const StallError&) {
    // fall through to the segment candidate
  }

  if (data.size() > 0) {
    if (data.dim() != x.size()) throw DimensionMismatch("dataset dimension differs from the projected point");
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(data.size());
    for (std::size_t j = 0; j < data.size(); ++j)
      order.emplace_back((data.sample(j) - x).squaredNorm(), j);
    std::sort(order.begin(), order.end());
    const std::size_t limit =
        opts.segment_candidates == 0 ? order.size() : static_cast<std::size_t>(opts.segment_candidates);
    std::optional<SegmentCrossing> nearest;
    std::size_t tried = 0;
    for (const auto& [squared, j] : order) {
      if (tried >= limit) break;
      const Eigen::VectorXd other = data.sample(j);
      const double other_margin = margin(model, other);
      if (!(std::abs(other_margin) <= tol) && !detail::opposite_signs(other_margin, x_margin)) continue;
      ++tried;
      SegmentCrossing crossing;
      if (std::abs(other_margin) <= tol) {
        crossing = {other, other_margin, 1.0, 0, true};
      } else if (x_margin < 0.0) {
        crossing = detail::bisect_known(model, x, other, x_margin, other_margin, tol, opts.max_bisection_steps);
      } else {
        crossing = detail::bisect_known(model, other, x, other_margin, x_margin, tol, opts.max_bisection_steps);
      }
      if (!crossing.converged) continue;
      if (!nearest || (crossing.point - x).squaredNorm() < (nearest->point - x).squaredNorm())
        nearest = std::move(crossing);
    }
    if (nearest) {
      ProjectionResult segment = detail::make_result(x, std::move(nearest->point), nearest->margin, true,
                                                     nearest->iterations, ProjectionMethod::segment_bisection);
      const double segment_distance = segment.distance;
      ProjectionResult refined = refine_on_boundary(model, segment, opts);
      if (refined.distance < segment_distance) refined.method = ProjectionMethod::combined;
      consider(std::move(refined));
    }
  }

  if (!best) throw StallError("no projection candidate could be formed");
  return std::move(*best);
}

/// x + (1 + kappa) (b - x): the boundary point pushed past the boundary.
inline Eigen::VectorXd adversarial_overshoot(const ProjectionResult& result, double kappa) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be nonnegative");
  if (kappa == 0.0) return result.point;
  return result.origin + (1.0 + kappa) * result.vector;
}

struct ProjectedDataset {
  Dataset data;
  std::vector<ProjectionResult> results;
  /// Correctly classified samples whose projection did not converge.
  std::size_t unconverged = 0;
  /// Samples left in place because the model misclassifies them (only with
  /// MisclassifiedPolicy::keep).
  std::vector<bool> misclassified;
  std::size_t misclassified_count = 0;
};

enum class MisclassifiedPolicy {
  /// Throw MisclassifiedSample.
  reject,
  /// Leave the sample unprojected and flag it.
  keep
};

/// Replaces every sample by its boundary projection. Non-converged samples
/// keep their original location and are counted. A sample on the wrong side
/// (beyond the boundary tolerance) throws MisclassifiedSample under
/// `reject`; under `keep` it stays in place, flagged and unconverged.
template <MarginField M>
ProjectedDataset project_dataset(const M& model, const Dataset& data, const ProjectorOptions& opts,
                                 unsigned threads = thread_count(),
                                 MisclassifiedPolicy policy = MisclassifiedPolicy::reject) {
  validate(opts);
  data.validate();
  ProjectedDataset out;
  out.misclassified.assign(data.size(), false);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double value = margin(model, Eigen::VectorXd(data.sample(i)));
    if (std::abs(value) <= opts.boundary_tolerance || is_correct(value, data.labels[i])) continue;
    if (policy == MisclassifiedPolicy::reject)
      throw MisclassifiedSample("sample " + std::to_string(i) + " is misclassified (margin " + std::to_string(value) +
                                ", label " + std::to_string(data.labels[i]) + ")");
    out.misclassified[i] = true;
    ++out.misclassified_count;
  }
  out.results.resize(data.size());
  parallel_for(
      data.size(),
      [&](std::size_t i) {
        const Eigen::VectorXd x = data.sample(i);
        if (out.misclassified[i]) {
          out.results[i] = detail::make_result(x, x, margin(model, x), false, 0, ProjectionMethod::newton_refine);
        } else {
          out.results[i] = project_to_boundary(model, x, data, opts);
        }
      },
      threads);
  out.data = data;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (out.results[i].converged) {
      out.data.samples.col(static_cast<Eigen::Index>(i)) = out.results[i].point;
    } else if (!out.misclassified[i]) {
      ++out.unconverged;
    }
  }
  return out;
}

}  // namespace blab
