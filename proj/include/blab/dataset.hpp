#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace blab {

/// Labeled samples stored column-wise: `samples.col(i)` is sample i and
/// `labels[i]` is its label in {0, 1}.
struct Dataset {
  Eigen::MatrixXd samples;
  std::vector<int> labels;
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  Eigen::Index dim() const noexcept { return samples.rows(); }
  auto sample(std::size_t i) const { return samples.col(static_cast<Eigen::Index>(i)); }

  std::size_t count(int label) const noexcept;
  bool has_both_classes() const noexcept { return count(0) > 0 && count(1) > 0; }

  /// Throws InvalidArgument unless sizes agree, s >= 1, every value is
  /// finite and (when `binary_labels`) labels lie in {0, 1}.
  void validate(bool binary_labels = true) const;

  /// Subset in the given order.
  Dataset select(const std::vector<std::size_t>& indices) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.labels == b.labels && a.samples.rows() == b.samples.rows() &&
           a.samples.cols() == b.samples.cols() && a.samples == b.samples;
  }
};

}  // namespace blab
