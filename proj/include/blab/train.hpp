#pragma once

#include "blab/dataset.hpp"
#include "blab/errors.hpp"
#include "blab/mlp.hpp"
#include "blab/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace blab {

enum class Optimizer { sgd_momentum, adam };

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-4;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 10000;
  int batch_size = 32;
  /// Mean true-class softmax probability required to stop, once every
  /// training sample is on its correct side.
  double accuracy_target = 0.9;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

enum class StopReason { criterion_met, epoch_cap };

struct TrainReport {
  int epochs_run = 0;
  double final_train_accuracy = 0.0;
  double final_loss = 0.0;
  double final_confidence = 0.0;
  StopReason stopped_reason = StopReason::epoch_cap;
};

inline const char* to_string(StopReason reason) {
  return reason == StopReason::criterion_met ? "criterion_met" : "epoch_cap";
}

inline const char* to_string(Optimizer optimizer) {
  return optimizer == Optimizer::adam ? "adam" : "sgd_momentum";
}

/// A sample counts as correct when its margin is strictly on the label's
/// side; a zero margin is misclassified.
inline bool is_correct(double margin_value, int label) {
  return label == 1 ? margin_value > 0.0 : margin_value < 0.0;
}

template <typename Scalar>
double accuracy(const Mlp<Scalar>& net, const Dataset& data) {
  if (data.size() == 0) throw InvalidArgument("accuracy of an empty dataset");
  const MatrixX<Scalar> logits = forward_batch(net, data.samples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    if (is_correct(static_cast<double>(logits(1, col) - logits(0, col)), data.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace detail {

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
  double confidence = 0.0;
};

template <typename Scalar>
EpochStats evaluate(const Mlp<Scalar>& net, const MatrixX<Scalar>& inputs, const std::vector<int>& labels) {
  const MatrixX<Scalar> logits = forward_batch(net, inputs);
  EpochStats stats;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Logits<Scalar> pair = logits.col(static_cast<Eigen::Index>(i));
    stats.loss += static_cast<double>(loss_nll<Scalar>(pair, labels[i]));
    stats.confidence += static_cast<double>(softmax<Scalar>(pair)(labels[i]));
    if (is_correct(static_cast<double>(margin_of<Scalar>(pair)), labels[i])) ++correct;
  }
  const double n = static_cast<double>(labels.size());
  stats.loss /= n;
  stats.confidence /= n;
  stats.accuracy = static_cast<double>(correct) / n;
  return stats;
}

/// First and second moments (Adam) or velocity (momentum SGD) per layer.
template <typename Scalar>
struct OptimizerState {
  std::vector<DenseLayer<Scalar>> first;
  std::vector<DenseLayer<Scalar>> second;
  long step = 0;

  explicit OptimizerState(const Mlp<Scalar>& net) {
    for (const auto& layer : net.layers()) {
      DenseLayer<Scalar> zero{MatrixX<Scalar>::Zero(layer.weights.rows(), layer.weights.cols()),
                              VectorX<Scalar>::Zero(layer.bias.size())};
      first.push_back(zero);
      second.push_back(std::move(zero));
    }
  }
};

template <typename Param, typename Grad>
void adam_update(Param& param, const Grad& grad, Param& m, Param& v, const TrainConfig& cfg, double bias1,
                 double bias2) {
  using Scalar = typename Param::Scalar;
  const auto b1 = static_cast<Scalar>(cfg.adam_beta1);
  const auto b2 = static_cast<Scalar>(cfg.adam_beta2);
  m = b1 * m + (Scalar(1) - b1) * grad;
  v = b2 * v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
  const auto step = static_cast<Scalar>(cfg.learning_rate / bias1);
  const auto eps = static_cast<Scalar>(cfg.adam_epsilon);
  const auto root_bias2 = static_cast<Scalar>(std::sqrt(bias2));
  param.array() -= step * m.array() / ((v.array().sqrt() / root_bias2) + eps);
}

template <typename Param, typename Grad>
void momentum_update(Param& param, const Grad& grad, Param& velocity, const TrainConfig& cfg) {
  using Scalar = typename Param::Scalar;
  velocity = static_cast<Scalar>(cfg.momentum) * velocity - static_cast<Scalar>(cfg.learning_rate) * grad;
  param += velocity;
}

}  // namespace detail

inline void validate(const TrainConfig& cfg, std::size_t dataset_size) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw InvalidArgument("learning_rate must be positive");
  if (cfg.max_epochs < 1) throw InvalidArgument("max_epochs must be at least 1");
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be positive");
  if (static_cast<std::size_t>(cfg.batch_size) > dataset_size)
    throw InvalidArgument("batch_size exceeds the dataset size");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) || !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0))
    throw InvalidArgument("adam betas must lie in [0, 1)");
  if (!(cfg.adam_epsilon > 0.0)) throw InvalidArgument("adam_epsilon must be positive");
  if (!(cfg.accuracy_target > 0.0 && cfg.accuracy_target <= 1.0))
    throw InvalidArgument("accuracy_target must lie in (0, 1]");
}

/// Mini-batch training on the mean negative log-likelihood. Stops at the
/// first epoch end where every sample is correctly classified and the mean
/// true-class probability reaches cfg.accuracy_target, or after
/// cfg.max_epochs. Throws DivergenceError on a non-finite loss or parameter.
template <typename Scalar>
TrainReport train(Mlp<Scalar>& net, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  if (!data.has_both_classes()) throw InvalidArgument("training data must contain both classes");
  if (data.dim() != net.input_dim())
    throw DimensionMismatch("dataset dimension " + std::to_string(data.dim()) + " does not match network input " +
                            std::to_string(net.input_dim()));
  validate(cfg, data.size());

  const MatrixX<Scalar> inputs = data.samples.cast<Scalar>();
  const std::size_t count = data.size();
  const std::size_t depth = net.layers().size();
  const auto batch_cap = static_cast<std::size_t>(cfg.batch_size);

  SplitMix64 rng(cfg.seed);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::OptimizerState<Scalar> state(net);

  std::vector<MatrixX<Scalar>> acts(depth);  // acts[k] is the input of layer k
  std::vector<MatrixX<Scalar>> pre(depth);

  TrainReport report;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t start = 0; start < count; start += batch_cap) {
      const std::size_t stop = std::min(count, start + batch_cap);
      const auto width = static_cast<Eigen::Index>(stop - start);
      MatrixX<Scalar> batch(inputs.rows(), width);
      MatrixX<Scalar> target = MatrixX<Scalar>::Zero(2, width);
      for (Eigen::Index c = 0; c < width; ++c) {
        const std::size_t idx = order[start + static_cast<std::size_t>(c)];
        batch.col(c) = inputs.col(static_cast<Eigen::Index>(idx));
        target(data.labels[idx], c) = Scalar(1);
      }

      auto& layers = net.layers();
      acts[0] = std::move(batch);
      for (std::size_t k = 0; k < depth; ++k) {
        pre[k] = layers[k].weights * acts[k];
        pre[k].colwise() += layers[k].bias;
        if (k + 1 < depth) acts[k + 1] = pre[k].cwiseMax(Scalar(0));
      }

      // d(mean NLL)/d(logits) = (softmax - onehot) / B.
      MatrixX<Scalar> delta = pre[depth - 1];
      for (Eigen::Index c = 0; c < width; ++c) delta.col(c) = softmax<Scalar>(delta.col(c));
      delta = (delta - target) / static_cast<Scalar>(width);

      ++state.step;
      const double bias1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
      const double bias2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
      for (std::size_t k = depth; k-- > 0;) {
        MatrixX<Scalar> grad_w = delta * acts[k].transpose();
        VectorX<Scalar> grad_b = delta.rowwise().sum();
        if (k > 0) {
          MatrixX<Scalar> next = layers[k].weights.transpose() * delta;
          delta = next.cwiseProduct((pre[k - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
        }
        if (cfg.optimizer == Optimizer::adam) {
          detail::adam_update(layers[k].weights, grad_w, state.first[k].weights, state.second[k].weights, cfg,
                              bias1, bias2);
          detail::adam_update(layers[k].bias, grad_b, state.first[k].bias, state.second[k].bias, cfg, bias1,
                              bias2);
        } else {
          detail::momentum_update(layers[k].weights, grad_w, state.first[k].weights, cfg);
          detail::momentum_update(layers[k].bias, grad_b, state.first[k].bias, cfg);
        }
      }
      if (!net.all_finite())
        throw DivergenceError("non-finite parameter after training step " + std::to_string(state.step));
    }

    const detail::EpochStats stats = detail::evaluate(net, inputs, data.labels);
    if (!std::isfinite(stats.loss)) throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
    report.epochs_run = epoch;
    report.final_loss = stats.loss;
    report.final_train_accuracy = stats.accuracy;
    report.final_confidence = stats.confidence;
    if (stats.accuracy == 1.0 && stats.confidence >= cfg.accuracy_target) {
      report.stopped_reason = StopReason::criterion_met;
      return report;
    }
  }
  report.stopped_reason = StopReason::epoch_cap;
  return report;
}

}  // namespace blab
