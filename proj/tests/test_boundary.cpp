#include "blab/boundary.hpp"
#include "blab/data.hpp"
#include "blab/metrics.hpp"
#include "blab/oracle.hpp"

#include <gtest/gtest.h>

using namespace blab;

namespace {

// Two-logit linear net whose margin is w.x.
Mlpd linear_net(const Eigen::Vector2d& w, double b = 0.0) {
  Eigen::Matrix2d weights;
  weights.row(0).setZero();
  weights.row(1) = w.transpose();
  return Mlpd({DenseLayer<double>{weights, Eigen::Vector2d(0.0, b)}});
}

// margin = 1 - 2 relu(x1 - 1): flat (dead gradient) left of x1 = 1,
// boundary at x1 = 1.5.
Mlpd dead_left_net() {
  Eigen::Matrix2d w1;
  w1 << 1, 0, 0, 0;
  Eigen::Matrix2d w2;
  w2 << 2, 0, 0, 0;
  return Mlpd({DenseLayer<double>{w1, Eigen::Vector2d(-1, 0)}, DenseLayer<double>{w2, Eigen::Vector2d(0, 1)}});
}

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

struct TrainedBlobs {
  Dataset data;
  Mlpd net = init_network({2, 16, 16, 2}, 3);
};

const TrainedBlobs& trained_blobs() {
  static const TrainedBlobs fixture = [] {
    TrainedBlobs out;
    out.data = gen_gaussian_blobs(2, 60, Eigen::Vector2d(-2, 0), Eigen::Vector2d(2, 0), 0.8, 5);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 16;
    cfg.max_epochs = 3000;
    cfg.seed = 4;
    const TrainReport report = train(out.net, out.data, cfg);
    if (report.stopped_reason != StopReason::criterion_met) throw std::runtime_error("fixture did not train");
    return out;
  }();
  return fixture;
}

ProjectorOptions all_segments() {
  ProjectorOptions opts;
  opts.segment_candidates = 0;
  return opts;
}

}  // namespace

TEST(HitBoundary, LinearHalfspaceDistance) {
  const Eigen::VectorXd x = Eigen::Vector2d(5, 0);
  const ProjectionResult r = hit_boundary(AffineMargin{Eigen::Vector2d(3, 4), 0.0}, x, ProjectorOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.residual, 1e-6);
  EXPECT_NEAR(r.distance, 3.0, 1e-4);
}

TEST(HitBoundary, OnBoundaryIsIdentity) {
  const Eigen::VectorXd x = Eigen::Vector2d(4, -3);
  const ProjectionResult r = hit_boundary(linear_net(Eigen::Vector2d(3, 4)), x, ProjectorOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.point, x);
  EXPECT_EQ(r.distance, 0.0);
}

TEST(HitBoundary, DeadGradientStallsAndSegmentFallbackRecovers) {
  const Mlpd net = dead_left_net();
  const Eigen::VectorXd x = Eigen::Vector2d(0, 0);
  ASSERT_EQ(margin(net, x), 1.0);
  EXPECT_THROW(hit_boundary(net, x, ProjectorOptions{}), StallError);
  EXPECT_THROW(project_to_boundary(net, x, Dataset{}, ProjectorOptions{}), StallError);
  const Dataset data = points({{Eigen::Vector2d(0, 0), 1}, {Eigen::Vector2d(3, 0), 0}});
  const ProjectionResult r = project_to_boundary(net, x, data, ProjectorOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.method, ProjectionMethod::segment_bisection);
  EXPECT_NEAR(r.distance, 1.5, 1e-6);
}

TEST(Bisect, LinearRoot) {
  const AffineMargin first{Eigen::Vector2d(1, 0), 0.0};
  const SegmentCrossing c = bisect_along_segment(first, Eigen::Vector2d(-1, 0), Eigen::Vector2d(3, 0), 1e-8);
  EXPECT_TRUE(c.converged);
  EXPECT_NEAR(c.point(0), 0.0, 1e-8);
  EXPECT_EQ(c.point(1), 0.0);
}

TEST(Bisect, SameSignRejected) {
  const AffineMargin first{Eigen::Vector2d(1, 0), 0.0};
  EXPECT_THROW(bisect_along_segment(first, Eigen::Vector2d(1, 0), Eigen::Vector2d(3, 0), 1e-8), InvalidArgument);
  EXPECT_THROW(bisect_along_segment(first, Eigen::Vector2d(-1, 0), Eigen::Vector2d(3, 0), 0.0), InvalidArgument);
}

TEST(Bisect, TightTolerance) {
  const Mlpd& net = trained_blobs().net;
  const Dataset& d = trained_blobs().data;
  const Eigen::VectorXd x = d.sample(0);
  std::size_t other = 0;
  while (d.labels[other] == d.labels[0]) ++other;
  const SegmentCrossing c = bisect_along_segment(net, x, Eigen::VectorXd(d.sample(other)), 1e-10);
  EXPECT_TRUE(c.converged);
  EXPECT_LE(std::abs(margin(net, c.point)), 1e-10);
}

TEST(ProjectToBoundary, LinearNetAnalyticPoint) {
  const Eigen::VectorXd x = Eigen::Vector2d(5, 0);
  const ProjectionResult r = project_to_boundary(linear_net(Eigen::Vector2d(3, 4)), x, Dataset{}, ProjectorOptions{});
  EXPECT_NEAR(r.point(0), 3.2, 1e-3);
  EXPECT_NEAR(r.point(1), -2.4, 1e-3);
  const Eigen::VectorXd exact = halfspace_projection(Eigen::Vector2d(3, 4), 0.0, x);
  EXPECT_LE((r.point - exact).norm(), 1e-6);
}

TEST(ProjectToBoundary, BoundedByOppositeSamples) {
  const auto& [data, net] = trained_blobs();
  for (const auto& opts : {ProjectorOptions{}, all_segments()}) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Eigen::VectorXd x = data.sample(i);
      const ProjectionResult r = project_to_boundary(net, x, data, opts);
      ASSERT_TRUE(r.converged);
      EXPECT_LE(r.residual, opts.boundary_tolerance);
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < data.size(); ++j)
        if (data.labels[j] != data.labels[i]) nearest = std::min(nearest, (data.sample(j) - x).norm());
      EXPECT_LE(r.distance, nearest + 1e-6);
    }
  }
}

TEST(ProjectToBoundary, RefinementNeverIncreasesDistance) {
  const auto& [data, net] = trained_blobs();
  const ProjectorOptions opts;
  for (std::size_t i = 0; i < 20; ++i) {
    const ProjectionResult start = hit_boundary(net, Eigen::VectorXd(data.sample(i)), opts);
    std::vector<double> trace;
    const ProjectionResult refined = refine_on_boundary(net, start, opts, &trace);
    EXPECT_LE(refined.distance, start.distance);
    for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LT(trace[k], trace[k - 1]);
  }
}

TEST(ProjectToBoundary, MatchesGridOracle) {
  const auto& [data, net] = trained_blobs();
  const PlanarField field = planar_field(net);
  for (std::size_t i = 0; i < data.size(); i += 12) {
    const Eigen::Vector2d x = data.sample(i);
    const ProjectionResult r = project_to_boundary(net, Eigen::VectorXd(x), data, ProjectorOptions{});
    const double reach = 1.02 * r.distance + 3e-3;
    const GridBounds bounds{x(0) - reach, x(0) + reach, x(1) - reach, x(1) + reach};
    const GridProjection g = grid_boundary_projection(field, x, bounds, 1e-3);
    EXPECT_NEAR(r.distance, g.distance, 0.02 * g.distance) << "sample " << i;
  }
}

TEST(PairSeparation, SharedSegmentBound) {
  const auto& [data, net] = trained_blobs();
  const ProjectedDataset p = project_dataset(net, data, all_segments());
  ASSERT_EQ(p.unconverged, 0u);
  int violations = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = i + 1; j < data.size(); ++j)
      if (data.labels[i] != data.labels[j] &&
          p.results[i].distance + p.results[j].distance > (data.sample(i) - data.sample(j)).norm() + 1e-6)
        ++violations;
  EXPECT_EQ(violations, 0);
}

TEST(Overshoot, KappaZeroIsBoundaryPoint) {
  const auto& [data, net] = trained_blobs();
  const ProjectionResult r = project_to_boundary(net, Eigen::VectorXd(data.sample(3)), data, ProjectorOptions{});
  EXPECT_EQ(adversarial_overshoot(r, 0.0), r.point);
  EXPECT_LE(std::abs(margin(net, adversarial_overshoot(r, 0.0))), ProjectorOptions{}.boundary_tolerance);
  EXPECT_THROW(adversarial_overshoot(r, -0.1), InvalidArgument);
}

TEST(Overshoot, TrainedNetFlipsLabels) {
  const auto& [data, net] = trained_blobs();
  const ProjectedDataset p = project_dataset(net, data, ProjectorOptions{});
  std::size_t flipped = 0, converged = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!p.results[i].converged) continue;
    ++converged;
    const double m = margin(net, adversarial_overshoot(p.results[i], 0.1));
    if (!is_correct(m, data.labels[i])) ++flipped;
  }
  EXPECT_GE(static_cast<double>(flipped), 0.95 * static_cast<double>(converged));
}

TEST(Overshoot, LinearNetAlwaysFlips) {
  const AffineMargin model{Eigen::Vector2d(1, -2), 0.3};
  SplitMix64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd x = Eigen::Vector2d(4 * rng.normal(), 4 * rng.normal());
    const double m = margin(model, x);
    if (std::abs(m) < 1e-3) continue;
    const ProjectionResult r = project_to_boundary(model, x, Dataset{}, ProjectorOptions{});
    EXPECT_LT(margin(model, adversarial_overshoot(r, 0.1)) * m, 0.0);
  }
}

TEST(ProjectDataset, FixpointIsIdentity) {
  const AffineMargin model{Eigen::Vector2d(1, 0), 0.0};
  const Dataset d = points({{Eigen::Vector2d(0, 1), 0}, {Eigen::Vector2d(0, -2), 1}});
  const ProjectedDataset p = project_dataset(model, d, ProjectorOptions{});
  EXPECT_EQ(p.data, d);
  EXPECT_EQ(p.unconverged, 0u);
}

TEST(ProjectDataset, LinearSeparableBlobsLandOnLine) {
  const Dataset d = gen_gaussian_blobs(2, 40, Eigen::Vector2d(-3, 1), Eigen::Vector2d(3, -1), 0.5, 2);
  Mlpd net = init_network({2, 2}, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 2000;
  ASSERT_EQ(train(net, d, cfg).stopped_reason, StopReason::criterion_met);
  const ProjectedDataset p = project_dataset(net, d, ProjectorOptions{});
  const auto& layer = net.layers()[0];
  const Eigen::Vector2d w = (layer.weights.row(1) - layer.weights.row(0)).transpose();
  const double b = layer.bias(1) - layer.bias(0);
  EXPECT_EQ(p.data.labels, d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(std::abs(w.dot(p.data.sample(i)) + b), 1e-6);
}

TEST(ProjectDataset, MisclassifiedPolicies) {
  const AffineMargin model{Eigen::Vector2d(1, 0), 0.0};
  const Dataset d = points({{Eigen::Vector2d(-1, 0), 0}, {Eigen::Vector2d(2, 0), 1}, {Eigen::Vector2d(3, 1), 0}});
  EXPECT_THROW(project_dataset(model, d, ProjectorOptions{}), MisclassifiedSample);
  const ProjectedDataset p = project_dataset(model, d, ProjectorOptions{}, 1, MisclassifiedPolicy::keep);
  EXPECT_EQ(p.misclassified_count, 1u);
  EXPECT_EQ(p.misclassified, (std::vector<bool>{false, false, true}));
  EXPECT_EQ(p.unconverged, 0u);
  EXPECT_EQ(Eigen::Vector2d(p.data.sample(2)), Eigen::Vector2d(3, 1));
  EXPECT_NEAR(p.data.samples(0, 0), 0.0, 1e-6);
}

TEST(ProjectDataset, ThreadCountDoesNotChangeResults) {
  const auto& [data, net] = trained_blobs();
  const ProjectedDataset one = project_dataset(net, data, ProjectorOptions{}, 1);
  const ProjectedDataset many = project_dataset(net, data, ProjectorOptions{}, 4);
  EXPECT_EQ(one.data, many.data);
}

TEST(ProjectorOptions, Validation) {
  ProjectorOptions opts;
  opts.boundary_tolerance = 0.0;
  EXPECT_THROW(validate(opts), InvalidArgument);
  opts = {};
  opts.segment_candidates = -1;
  EXPECT_THROW(validate(opts), InvalidArgument);
}
