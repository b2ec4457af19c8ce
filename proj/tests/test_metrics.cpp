#include "blab/data.hpp"
#include "blab/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace blab;

namespace {

Dataset points(std::initializer_list<std::pair<Eigen::Vector2d, int>> items) {
  Dataset d;
  d.samples.resize(2, static_cast<Eigen::Index>(items.size()));
  Eigen::Index c = 0;
  for (const auto& [x, label] : items) {
    d.samples.col(c++) = x;
    d.labels.push_back(label);
  }
  return d;
}

Eigen::MatrixXd columns(std::initializer_list<Eigen::Vector2d> vs) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(vs.size()));
  Eigen::Index c = 0;
  for (const auto& v : vs) m.col(c++) = v;
  return m;
}

}  // namespace

TEST(NearestOpposite, SinglePair) {
  EXPECT_EQ(nearest_opposite_mean_distance(points({{Eigen::Vector2d(0, 0), 0}, {Eigen::Vector2d(3, 4), 1}})), 5.0);
}

TEST(NearestOpposite, FourPointEnumeration) {
  const Dataset d = points({{Eigen::Vector2d(0, 0), 0},
                            {Eigen::Vector2d(0, 1), 0},
                            {Eigen::Vector2d(1, 0), 1},
                            {Eigen::Vector2d(2, 1), 1}});
  EXPECT_NEAR(nearest_opposite_mean_distance(d), (1 + std::sqrt(2.0) + 1 + 2) / 4, 1e-12);
  EXPECT_NEAR(nearest_opposite_mean_distance(d), 1.353553, 1e-6);
}

TEST(NearestOpposite, ScalesExactlyByPowerOfTwo) {
  Dataset d = gen_gaussian_blobs(3, 20, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 2, 0), 0.7, 3);
  const double base = nearest_opposite_mean_distance(d);
  d.samples *= 4.0;
  EXPECT_EQ(nearest_opposite_mean_distance(d), 4.0 * base);
  d.samples *= 0.75;
  EXPECT_NEAR(nearest_opposite_mean_distance(d), 3.0 * base, 1e-12 * base);
}

TEST(NearestOpposite, InvariantUnderIsometryAndReordering) {
  const Dataset d = gen_gaussian_blobs(3, 25, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(2, 1, 0), 1.0, 8);
  const double base = nearest_opposite_mean_distance(d);
  SplitMix64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Matrix3d m;
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
    const Eigen::Matrix3d q = Eigen::HouseholderQR<Eigen::Matrix3d>(m).householderQ();
    const Eigen::Vector3d shift(rng.normal(), rng.normal(), rng.normal());
    Dataset moved = d;
    moved.samples = (q * d.samples).colwise() + shift;
    EXPECT_NEAR(nearest_opposite_mean_distance(moved), base, 1e-9);
  }
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  EXPECT_NEAR(nearest_opposite_mean_distance(d.select(order)), base, 1e-12);
}

TEST(NearestOpposite, SingleClassRejected) {
  EXPECT_THROW(nearest_opposite_mean_distance(points({{Eigen::Vector2d(0, 0), 0}, {Eigen::Vector2d(1, 0), 0}})),
               InvalidArgument);
}

TEST(GlobalDifference, ReproducedVectorsGiveZero) {
  const Eigen::MatrixXd f = columns({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, -2), Eigen::Vector2d(3, 3)});
  const GlobalDifferenceEstimate e = score_global_difference(f, f, 0.95);
  EXPECT_EQ(e.phi, 0.0);
  EXPECT_EQ(e.alphas, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(e.aligned_count, 3u);
}

TEST(GlobalDifference, OrthogonalVectorsGiveS) {
  const Eigen::MatrixXd f = columns({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, -2)});
  const Eigen::MatrixXd g = columns({Eigen::Vector2d(0, 1), Eigen::Vector2d(5, 0)});
  const GlobalDifferenceEstimate e = score_global_difference(f, g, 0.95);
  EXPECT_EQ(e.phi, 2.0);
  EXPECT_EQ(e.misaligned_count, 2u);
}

TEST(GlobalDifference, SoundnessAndMonotoneResponse) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd f(2, 6), g(2, 6);
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      f.data()[k] = rng.normal();
      g.data()[k] = f.data()[k] + 0.2 * rng.normal();
    }
    const GlobalDifferenceEstimate e = score_global_difference(f, g, 0.9);
    EXPECT_GE(e.phi, 0.0);
    EXPECT_LE(e.phi, 6.0);
    for (double a : e.alphas) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
    Eigen::MatrixXd shorter = g;
    const Eigen::Index c = static_cast<Eigen::Index>(rng.below(6));
    shorter.col(c) *= rng.uniform();
    EXPECT_GE(score_global_difference(f, shorter, 0.9).phi, e.phi);
  }
}

TEST(GlobalDifference, EstimateWithLinearSeparator) {
  const Dataset original = points({{Eigen::Vector2d(-2, 0), 0}, {Eigen::Vector2d(2, 0), 1}});
  const Dataset projected = points({{Eigen::Vector2d(-1, 0), 0}, {Eigen::Vector2d(1, 0), 1}});
  const ProjectorOptions opts;
  const auto exact = estimate_global_difference(original, projected, AffineMargin{Eigen::Vector2d(1, 0), 0.0}, 0.95,
                                                opts);
  EXPECT_NEAR(exact.phi, 0.0, 1e-9);
  const auto shifted = estimate_global_difference(original, projected, AffineMargin{Eigen::Vector2d(1, 0), 0.5},
                                                  0.95, opts);
  EXPECT_NEAR(shifted.alphas[0], 0.5, 1e-9);
  EXPECT_EQ(shifted.alphas[1], 1.0);
  EXPECT_NEAR(shifted.phi, 0.5, 1e-9);
}

TEST(GlobalDifference, CoincidingProjectionsHaveNoSeparator) {
  const Dataset original = points({{Eigen::Vector2d(-1, 0), 0}, {Eigen::Vector2d(1, 0), 1}});
  const Dataset projected = points({{Eigen::Vector2d(0, 0), 0}, {Eigen::Vector2d(0, 0), 1}});
  EXPECT_THROW(estimate_global_difference(original, projected, AffineMargin{Eigen::Vector2d(1, 0), 0.0}, 0.95,
                                          ProjectorOptions{}),
               MisclassifiedSample);
}

TEST(GeneralizationGap, IdenticalSetsAndRandomLabels) {
  const Dataset train_set = gen_gaussian_blobs(2, 100, Eigen::Vector2d(-3, 0), Eigen::Vector2d(3, 0), 0.5, 1);
  Mlpd net = init_network({2, 8, 2}, 2);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 1000;
  ASSERT_EQ(train(net, train_set, cfg).stopped_reason, StopReason::criterion_met);
  EXPECT_EQ(generalization_gap(net, train_set, train_set).gap, 0.0);
  Dataset shuffled = train_set;
  SplitMix64 rng(3);
  for (auto& label : shuffled.labels) label = static_cast<int>(rng.below(2));
  const GeneralizationGap g = generalization_gap(net, train_set, shuffled);
  EXPECT_EQ(g.train_accuracy, 1.0);
  EXPECT_NEAR(g.gap, 0.5, 0.1);
  EXPECT_THROW(generalization_gap(net, train_set, Dataset{}), InvalidArgument);
}
