#pragma once

#include "blab/boundary.hpp"
#include "blab/dataset.hpp"
#include "blab/errors.hpp"
#include "blab/train.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace blab {

/// For every sample, the Euclidean distance to its nearest opposite-label
/// sample (exhaustive search).
std::vector<double> nearest_opposite_distances(const Dataset& data);

/// (1/s) sum_i min_{j : l_j != l_i} |x_i - x_j|.
double nearest_opposite_mean_distance(const Dataset& data);

/// Heuristic estimate of the global difference of a classifier f: the
/// maximizing separator of the projected set is replaced by one given
/// separator g. Every alpha lies in [0, 1] and phi = s - sum(alpha).
struct GlobalDifferenceEstimate {
  std::vector<double> alphas;
  double phi = 0.0;
  std::size_t aligned_count = 0;
  std::size_t misaligned_count = 0;
  double cosine_threshold = 0.95;
};

/// Scores column-wise projection vectors: alpha_i = clamp(|g_i| / |f_i|, 0, 1)
/// when cos(f_i, g_i) >= cosine_threshold, else 0. A zero f_i or g_i gives
/// alpha_i = 0.
GlobalDifferenceEstimate score_global_difference(const Eigen::MatrixXd& f_vectors, const Eigen::MatrixXd& g_vectors,
                                                 double cosine_threshold);

/// Projects every sample of `projected` onto the boundary of `g` and scores
/// the resulting vectors against the f-vectors (projected - original).
/// Throws MisclassifiedSample unless g classifies every projected sample.
template <MarginField G>
GlobalDifferenceEstimate estimate_global_difference(const Dataset& original, const Dataset& projected, const G& g,
                                                    double cosine_threshold, const ProjectorOptions& opts) {
  if (original.size() != projected.size() || original.dim() != projected.dim() || original.labels != projected.labels)
    throw InvalidArgument("original and projected datasets must align sample by sample");
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const double value = margin(g, Eigen::VectorXd(projected.sample(i)));
    if (!is_correct(value, projected.labels[i]))
      throw MisclassifiedSample("g misclassifies projected sample " + std::to_string(i));
  }
  const Eigen::MatrixXd f_vectors = projected.samples - original.samples;
  const ProjectedDataset reprojected = project_dataset(g, projected, opts);
  Eigen::MatrixXd g_vectors(projected.dim(), static_cast<Eigen::Index>(projected.size()));
  for (std::size_t i = 0; i < projected.size(); ++i) {
    const auto& r = reprojected.results[i];
    g_vectors.col(static_cast<Eigen::Index>(i)) = r.converged ? r.vector : Eigen::VectorXd::Zero(projected.dim());
  }
  return score_global_difference(f_vectors, g_vectors, cosine_threshold);
}

struct GeneralizationGap {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double gap = 0.0;
};

template <typename Scalar>
GeneralizationGap generalization_gap(const Mlp<Scalar>& net, const Dataset& train_set, const Dataset& test_set) {
  if (train_set.size() == 0 || test_set.size() == 0) throw InvalidArgument("generalization gap needs nonempty sets");
  GeneralizationGap out;
  out.train_accuracy = accuracy(net, train_set);
  out.test_accuracy = accuracy(net, test_set);
  out.gap = out.train_accuracy - out.test_accuracy;
  return out;
}

}  // namespace blab
