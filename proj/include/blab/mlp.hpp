#pragma once

#include "blab/errors.hpp"
#include "blab/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace blab {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Logits = Eigen::Matrix<Scalar, 2, 1>;

/// Fully connected layer mapping `weights.cols()` inputs to `weights.rows()`
/// outputs.
template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;
  VectorX<Scalar> bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
           a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
  }
};

/// Dense feed-forward binary classifier: rectifier on every hidden layer,
/// identity on the 2-logit output. The scalar classifier is the margin
/// logit[1] - logit[0]; its zero set is the decision boundary.
template <typename Scalar>
class Mlp {
 public:
  using Layer = DenseLayer<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  explicit Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) { check_shapes(); }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  /// Mutable access for optimizers; shapes must not change.
  std::vector<Layer>& layers() noexcept { return layers_; }

  Eigen::Index input_dim() const noexcept { return layers_.front().weights.cols(); }

  std::vector<int> dims() const {
    std::vector<int> out{static_cast<int>(input_dim())};
    for (const auto& layer : layers_) out.push_back(static_cast<int>(layer.weights.rows()));
    return out;
  }

  bool all_finite() const {
    for (const auto& layer : layers_)
      if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
    return true;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.layers_ == b.layers_; }

 private:
  void check_shapes() const {
    if (layers_.empty()) throw InvalidArgument("network needs at least one layer");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& layer = layers_[k];
      if (layer.weights.rows() < 1 || layer.weights.cols() < 1)
        throw InvalidArgument("layer " + std::to_string(k) + " has an empty weight matrix");
      if (layer.bias.size() != layer.weights.rows())
        throw InvalidArgument("layer " + std::to_string(k) + " bias length differs from row count");
      if (k > 0 && layer.weights.cols() != layers_[k - 1].weights.rows())
        throw InvalidArgument("layer " + std::to_string(k) + " does not chain with its predecessor");
    }
    if (layers_.back().weights.rows() != 2) throw InvalidArgument("output layer must have 2 logits");
  }

  std::vector<Layer> layers_;
};

using Mlpd = Mlp<double>;

/// Validates a layer dimension list: at least two entries, all positive,
/// last entry 2.
inline void check_layer_dims(std::span<const int> dims) {
  if (dims.size() < 2) throw InvalidArgument("layer dimension list needs at least 2 entries");
  for (int d : dims)
    if (d <= 0) throw InvalidArgument("layer dimensions must be positive");
  if (dims.back() != 2) throw InvalidArgument("last layer dimension must be 2");
}

/// Zero biases, weights ~ N(0, 2 / fan_in), drawn row-major layer by layer
/// from SplitMix64(seed).
template <typename Scalar = double>
Mlp<Scalar> init_network(std::span<const int> dims, std::uint64_t seed) {
  check_layer_dims(dims);
  SplitMix64 rng(seed);
  std::vector<DenseLayer<Scalar>> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t k = 1; k < dims.size(); ++k) {
    const int fan_in = dims[k - 1];
    const double scale = std::sqrt(2.0 / fan_in);
    DenseLayer<Scalar> layer{MatrixX<Scalar>(dims[k], fan_in), VectorX<Scalar>::Zero(dims[k])};
    for (int r = 0; r < dims[k]; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = static_cast<Scalar>(scale * rng.normal());
    layers.push_back(std::move(layer));
  }
  return Mlp<Scalar>(std::move(layers));
}

template <typename Scalar = double>
Mlp<Scalar> init_network(std::initializer_list<int> dims, std::uint64_t seed) {
  return init_network<Scalar>(std::span<const int>(dims.begin(), dims.size()), seed);
}

namespace detail {

template <typename Scalar, typename Derived>
void check_input(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != net.input_dim())
    throw DimensionMismatch("input has dimension " + std::to_string(x.rows()) + ", network expects " +
                            std::to_string(net.input_dim()));
}

}  // namespace detail

/// Logits for a batch of column samples (2 x B).
template <typename Scalar, typename Derived>
MatrixX<Scalar> forward_batch(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& inputs) {
  detail::check_input(net, inputs);
  const auto& layers = net.layers();
  MatrixX<Scalar> act = inputs.template cast<Scalar>();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    MatrixX<Scalar> next = layers[k].weights * act;
    next.colwise() += layers[k].bias;
    if (k + 1 < layers.size()) next = next.cwiseMax(Scalar(0));
    act = std::move(next);
  }
  return act;
}

template <typename Scalar, typename Derived>
Logits<Scalar> forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  detail::check_input(net, x);
  const auto& layers = net.layers();
  VectorX<Scalar> act = x.template cast<Scalar>();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    VectorX<Scalar> next = layers[k].weights * act + layers[k].bias;
    if (k + 1 < layers.size()) next = next.cwiseMax(Scalar(0));
    act = std::move(next);
  }
  return act;
}

/// logit[1] - logit[0]. Positive predicts label 1, negative label 0.
template <typename Scalar>
Scalar margin_of(const Logits<Scalar>& logits) {
  return logits(1) - logits(0);
}

template <typename Scalar, typename Derived>
Scalar margin(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  return margin_of<Scalar>(forward(net, x));
}

/// Gradient of the margin with respect to the input, by backpropagation.
template <typename Scalar, typename Derived>
VectorX<Scalar> grad_input(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  detail::check_input(net, x);
  const auto& layers = net.layers();
  const std::size_t depth = layers.size();
  // Rectifier masks of the hidden layers.
  std::vector<VectorX<Scalar>> active;
  active.reserve(depth - 1);
  VectorX<Scalar> act = x.template cast<Scalar>();
  for (std::size_t k = 0; k + 1 < depth; ++k) {
    VectorX<Scalar> pre = layers[k].weights * act + layers[k].bias;
    active.push_back((pre.array() > Scalar(0)).template cast<Scalar>().matrix());
    act = pre.cwiseMax(Scalar(0));
  }
  VectorX<Scalar> upstream =
      layers.back().weights.row(1).transpose() - layers.back().weights.row(0).transpose();
  for (std::size_t k = depth - 1; k-- > 0;) {
    upstream = layers[k].weights.transpose() * upstream.cwiseProduct(active[k]);
  }
  return upstream;
}

/// Numerically stable softmax of a logit pair.
template <typename Scalar>
Logits<Scalar> softmax(const Logits<Scalar>& logits) {
  const Scalar peak = logits.maxCoeff();
  Logits<Scalar> e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

/// -log softmax(logits)[label].
template <typename Scalar>
Scalar loss_nll(const Logits<Scalar>& logits, int label) {
  if (label != 0 && label != 1) throw InvalidArgument("label must be 0 or 1");
  if (!logits.allFinite()) throw NumericError("non-finite logits");
  const Scalar peak = logits.maxCoeff();
  const Scalar lse = peak + std::log((logits.array() - peak).exp().sum());
  return lse - logits(label);
}

}  // namespace blab
