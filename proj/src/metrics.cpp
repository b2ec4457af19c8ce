#include "blab/metrics.hpp"

namespace blab {

std::vector<double> nearest_opposite_distances(const Dataset& data) {
  data.validate();
  if (!data.has_both_classes()) throw InvalidArgument("nearest-opposite distance needs both classes");
  std::vector<double> out(data.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (data.labels[i] == data.labels[j]) continue;
      out[i] = std::min(out[i], (data.sample(i) - data.sample(j)).norm());
    }
  }
  return out;
}

double nearest_opposite_mean_distance(const Dataset& data) {
  const std::vector<double> distances = nearest_opposite_distances(data);
  double sum = 0.0;
  for (double d : distances) sum += d;
  return sum / static_cast<double>(distances.size());
}

GlobalDifferenceEstimate score_global_difference(const Eigen::MatrixXd& f_vectors, const Eigen::MatrixXd& g_vectors,
                                                 double cosine_threshold) {
  if (!(cosine_threshold > 0.0 && cosine_threshold <= 1.0))
    throw InvalidArgument("cosine_threshold must lie in (0, 1]");
  if (f_vectors.rows() != g_vectors.rows() || f_vectors.cols() != g_vectors.cols())
    throw DimensionMismatch("f and g projection vectors must have the same shape");
  GlobalDifferenceEstimate out;
  out.cosine_threshold = cosine_threshold;
  out.alphas.assign(static_cast<std::size_t>(f_vectors.cols()), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < f_vectors.cols(); ++i) {
    const double f_norm = f_vectors.col(i).norm();
    const double g_norm = g_vectors.col(i).norm();
    double alpha = 0.0;
    if (f_norm > 0.0 && g_norm > 0.0 &&
        f_vectors.col(i).dot(g_vectors.col(i)) / (f_norm * g_norm) >= cosine_threshold) {
      alpha = std::clamp(g_norm / f_norm, 0.0, 1.0);
      ++out.aligned_count;
    } else {
      ++out.misaligned_count;
    }
    out.alphas[static_cast<std::size_t>(i)] = alpha;
    total += alpha;
  }
  out.phi = static_cast<double>(f_vectors.cols()) - total;
  return out;
}

}  // namespace blab
