#include "blab/checkpoint.hpp"
#include "blab/gradcheck.hpp"
#include "blab/mlp.hpp"
#include "blab/train.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace blab;

namespace {

Mlpd single_layer(const Eigen::Matrix2d& w, const Eigen::Vector2d& b) {
  return Mlpd({DenseLayer<double>{w, b}});
}

Dataset make_dataset(std::initializer_list<std::pair<Eigen::Vector2d, int>> items) {
  Dataset d;
  d.samples.resize(2, static_cast<Eigen::Index>(items.size()));
  Eigen::Index c = 0;
  for (const auto& [x, label] : items) {
    d.samples.col(c++) = x;
    d.labels.push_back(label);
  }
  return d;
}

}  // namespace

TEST(InitNetwork, DeterministicForSeed) {
  EXPECT_EQ(init_network({2, 2}, 7), init_network({2, 2}, 7));
  EXPECT_FALSE(init_network({2, 2}, 7) == init_network({2, 2}, 8));
}

TEST(InitNetwork, MnistArchitectureShapes) {
  const Mlpd net = init_network({784, 500, 256, 128, 32, 2}, 1);
  ASSERT_EQ(net.layers().size(), 5u);
  const std::pair<int, int> shapes[] = {{500, 784}, {256, 500}, {128, 256}, {32, 128}, {2, 32}};
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(net.layers()[k].weights.rows(), shapes[k].first);
    EXPECT_EQ(net.layers()[k].weights.cols(), shapes[k].second);
    EXPECT_TRUE(net.layers()[k].bias.isZero(0.0));
  }
}

TEST(InitNetwork, RejectsDegenerateDims) {
  EXPECT_THROW(init_network({2}, 1), InvalidArgument);
  EXPECT_THROW(init_network({2, 0, 2}, 1), InvalidArgument);
  EXPECT_THROW(init_network({2, 3}, 1), InvalidArgument);
}

TEST(InitNetwork, HeScaling) {
  const Mlpd net = init_network({400, 300, 2}, 3);
  const auto& w = net.layers()[0].weights;
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.003);
  EXPECT_NEAR(var, 2.0 / 400.0, 0.0002);
}

TEST(Mlp, RejectsBrokenChain) {
  std::vector<DenseLayer<double>> layers{{Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3)},
                                         {Eigen::MatrixXd::Ones(2, 4), Eigen::VectorXd::Zero(2)}};
  EXPECT_THROW(Mlpd{layers}, InvalidArgument);
}

TEST(Forward, IdentityLayer) {
  const Mlpd net = single_layer(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
  const auto logits = forward(net, Eigen::Vector2d(1.0, 3.0));
  EXPECT_EQ(logits(0), 1.0);
  EXPECT_EQ(logits(1), 3.0);
  EXPECT_EQ(margin(net, Eigen::Vector2d(1.0, 3.0)), 2.0);
}

TEST(Forward, ZeroInputZeroBiasGivesZeroLogits) {
  const Mlpd net = init_network({5, 7, 3, 2}, 11);
  const auto logits = forward(net, Eigen::VectorXd::Zero(5));
  EXPECT_EQ(logits(0), 0.0);
  EXPECT_EQ(logits(1), 0.0);
}

TEST(Forward, PureAndDimensionChecked) {
  const Mlpd net = init_network({3, 4, 2}, 5);
  const Eigen::Vector3d x(0.3, -1.2, 2.0);
  EXPECT_EQ(forward(net, x), forward(net, x));
  EXPECT_THROW(forward(net, Eigen::Vector2d(1.0, 2.0)), DimensionMismatch);
}

TEST(Forward, BatchMatchesSingle) {
  const Mlpd net = init_network({3, 6, 2}, 9);
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Random(3, 5);
  const Eigen::MatrixXd batch = forward_batch(net, inputs);
  for (Eigen::Index c = 0; c < 5; ++c) {
    const auto single = forward(net, Eigen::VectorXd(inputs.col(c)));
    EXPECT_NEAR(batch(0, c), single(0), 1e-14);
    EXPECT_NEAR(batch(1, c), single(1), 1e-14);
  }
}

TEST(Margin, SignConvention) {
  EXPECT_EQ(margin_of(Logits<double>(1.0, 3.0)), 2.0);
  EXPECT_EQ(margin_of(Logits<double>(0.5, 0.5)), 0.0);
  EXPECT_EQ(margin_of(Logits<double>(4.0, 1.0)), -3.0);
  EXPECT_TRUE(is_correct(2.0, 1));
  EXPECT_TRUE(is_correct(-3.0, 0));
  EXPECT_FALSE(is_correct(0.0, 0));
  EXPECT_FALSE(is_correct(0.0, 1));
}

TEST(GradInput, LinearMargin) {
  Eigen::Matrix2d w;
  w << 0.0, 0.0, 3.0, 4.0;
  const Mlpd net = single_layer(w, Eigen::Vector2d(0.5, -0.25));
  for (const Eigen::Vector2d x : {Eigen::Vector2d(0, 0), Eigen::Vector2d(-5, 2), Eigen::Vector2d(1e3, 7)}) {
    const Eigen::VectorXd g = grad_input(net, x);
    EXPECT_EQ(g(0), 3.0);
    EXPECT_EQ(g(1), 4.0);
  }
}

TEST(GradInput, DeadRegionIsZero) {
  // Hidden units relu(x1) and relu(x2) are both off for negative inputs.
  std::vector<DenseLayer<double>> layers{
      {Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)},
      {(Eigen::MatrixXd(2, 2) << 1.0, -2.0, 0.5, 3.0).finished(), Eigen::VectorXd::Zero(2)}};
  const Mlpd net(layers);
  EXPECT_TRUE(grad_input(net, Eigen::Vector2d(-1.0, -0.5)).isZero(0.0));
  EXPECT_FALSE(grad_input(net, Eigen::Vector2d(1.0, 0.5)).isZero(0.0));
}

TEST(GradInput, MatchesFiniteDifferences) {
  const GradientSuiteResult suite = run_gradient_suite(100, 20240601);
  EXPECT_EQ(suite.checked, 100);
  EXPECT_EQ(suite.passed, 100) << "worst relative error " << suite.worst_relative_error;
}

TEST(GradInput, KinkDistanceOfKnownNet) {
  // One hidden unit relu(x1 - 0.5): the kink is the line x1 = 0.5.
  std::vector<DenseLayer<double>> layers{
      {(Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished(), (Eigen::VectorXd(1) << -0.5).finished()},
      {(Eigen::MatrixXd(2, 1) << 0.0, 1.0).finished(), Eigen::VectorXd::Zero(2)}};
  const Mlpd net(layers);
  EXPECT_NEAR(kink_distance(net, Eigen::Vector2d(0.2, 9.0)), 0.3, 1e-15);
}

TEST(LossNll, HandValues) {
  EXPECT_NEAR(loss_nll(Logits<double>(0.0, 0.0), 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_nll(Logits<double>(0.0, 0.0), 1), 0.693147, 1e-6);
  EXPECT_NEAR(loss_nll(Logits<double>(10.0, 10.0), 1), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_nll(Logits<double>(0.0, std::log(3.0)), 1), -std::log(0.75), 1e-15);
  EXPECT_NEAR(loss_nll(Logits<double>(0.0, std::log(3.0)), 1), 0.287682, 1e-6);
}

TEST(LossNll, MonotoneAndValidated) {
  for (double base : {-5.0, 0.0, 3.0})
    for (double delta : {1e-6, 0.1, 2.0})
      EXPECT_LT(loss_nll(Logits<double>(0.7, base + delta), 1), loss_nll(Logits<double>(0.7, base), 1));
  EXPECT_THROW(loss_nll(Logits<double>(0.0, 0.0), 2), InvalidArgument);
  EXPECT_THROW(loss_nll(Logits<double>(std::nan(""), 0.0), 0), NumericError);
}

TEST(Softmax, Normalized) {
  SplitMix64 rng(4);
  for (int k = 0; k < 1000; ++k) {
    const Logits<double> logits(rng.uniform(-50, 50), rng.uniform(-50, 50));
    const auto p = softmax(logits);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  }
}

TEST(Accuracy, BoundaryConvention) {
  const Mlpd net = single_layer((Eigen::Matrix2d() << 0, 0, 1, 0).finished(), Eigen::Vector2d::Zero());
  // margin = x1
  EXPECT_EQ(accuracy(net, make_dataset({{{1, 0}, 1}, {{2, 0}, 1}})), 1.0);
  EXPECT_EQ(accuracy(net, make_dataset({{{-1, 0}, 1}, {{1, 0}, 0}})), 0.0);
  EXPECT_EQ(accuracy(net, make_dataset({{{0, 0}, 1}, {{1, 0}, 1}, {{-1, 0}, 0}, {{-2, 0}, 0}})), 0.75);
  EXPECT_THROW(accuracy(net, Dataset{}), InvalidArgument);
}

TEST(Train, TwoSeparablePointsReachCriterion) {
  Mlpd net = init_network({2, 4, 2}, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 2;
  const Dataset data = make_dataset({{{-1, 0}, 0}, {{1, 0}, 1}});
  const TrainReport report = train(net, data, cfg);
  EXPECT_EQ(report.stopped_reason, StopReason::criterion_met);
  EXPECT_EQ(report.final_train_accuracy, 1.0);
  EXPECT_GE(report.final_confidence, 0.9);
  EXPECT_LT(margin(net, Eigen::Vector2d(-1, 0)) * margin(net, Eigen::Vector2d(1, 0)), 0.0);
}

TEST(Train, EpochCapOnHardData) {
  Mlpd net = init_network({2, 3, 2}, 3);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  cfg.batch_size = 4;
  const Dataset xor_data = make_dataset({{{1, 1}, 0}, {{-1, -1}, 0}, {{1, -1}, 1}, {{-1, 1}, 1}});
  const TrainReport report = train(net, xor_data, cfg);
  EXPECT_EQ(report.stopped_reason, StopReason::epoch_cap);
  EXPECT_EQ(report.epochs_run, 1);
}

TEST(Train, DeterministicForSeed) {
  const Dataset data = make_dataset({{{-1, 0.2}, 0}, {{-0.5, -1}, 0}, {{1, 0.1}, 1}, {{0.7, 1}, 1}});
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.batch_size = 2;
  cfg.seed = 99;
  Mlpd a = init_network({2, 8, 2}, 1);
  Mlpd b = init_network({2, 8, 2}, 1);
  const TrainReport ra = train(a, data, cfg);
  const TrainReport rb = train(b, data, cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(ra.epochs_run, rb.epochs_run);
}

TEST(Train, CriterionImpliesOppositeSigns) {
  SplitMix64 rng(8);
  Dataset data;
  data.samples.resize(2, 20);
  for (Eigen::Index c = 0; c < 20; ++c) {
    const int label = static_cast<int>(c % 2);
    data.samples.col(c) = Eigen::Vector2d(label ? 1.5 : -1.5, 0.0) + 0.3 * Eigen::Vector2d(rng.normal(), rng.normal());
    data.labels.push_back(label);
  }
  Mlpd net = init_network({2, 16, 2}, 2);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 5;
  cfg.optimizer = Optimizer::sgd_momentum;
  ASSERT_EQ(train(net, data, cfg).stopped_reason, StopReason::criterion_met);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t j = 0; j < data.size(); ++j)
      if (data.labels[i] != data.labels[j])
        EXPECT_LT(margin(net, Eigen::VectorXd(data.sample(i))) * margin(net, Eigen::VectorXd(data.sample(j))), 0.0);
}

TEST(Train, DivergenceIsDistinct) {
  Mlpd net = init_network({2, 8, 2}, 1);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sgd_momentum;
  cfg.learning_rate = 1e200;
  cfg.batch_size = 2;
  const Dataset data = make_dataset({{{-1, 0}, 0}, {{1, 0}, 1}, {{-2, 1}, 0}, {{2, 1}, 1}});
  EXPECT_THROW(train(net, data, cfg), DivergenceError);
}

TEST(Train, ValidatesConfig) {
  Mlpd net = init_network({2, 4, 2}, 3);
  const Dataset data = make_dataset({{{-1, 0}, 0}, {{1, 0}, 1}});
  TrainConfig cfg;
  cfg.batch_size = 3;
  EXPECT_THROW(train(net, data, cfg), InvalidArgument);
  cfg.batch_size = 2;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(net, data, cfg), InvalidArgument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  const Mlpd net = init_network({7, 5, 3, 2}, 42);
  const std::string bytes = encode_checkpoint(net);
  EXPECT_EQ(bytes.substr(0, 4), "BLAB");
  EXPECT_EQ(decode_checkpoint(bytes), net);
  EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
}

TEST(Checkpoint, RejectsCorruption) {
  std::string bytes = encode_checkpoint(init_network({2, 3, 2}, 1));
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), DataError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), DataError);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_checkpoint(bad_version), DataError);
}
