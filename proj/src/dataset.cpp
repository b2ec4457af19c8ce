#include "blab/dataset.hpp"

#include "blab/errors.hpp"

#include <algorithm>

namespace blab {

std::size_t Dataset::count(int label) const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::validate(bool binary_labels) const {
  if (labels.empty()) throw InvalidArgument("dataset '" + name + "' is empty");
  if (static_cast<std::size_t>(samples.cols()) != labels.size())
    throw InvalidArgument("dataset '" + name + "' has mismatched sample and label counts");
  if (samples.rows() < 1) throw InvalidArgument("dataset '" + name + "' has zero-dimensional samples");
  if (!samples.allFinite()) throw InvalidArgument("dataset '" + name + "' contains non-finite values");
  if (binary_labels &&
      std::any_of(labels.begin(), labels.end(), [](int label) { return label != 0 && label != 1; }))
    throw InvalidArgument("dataset '" + name + "' has labels outside {0, 1}");
}

Dataset Dataset::select(const std::vector<std::size_t>& indices) const {
  Dataset out;
  out.name = name;
  out.samples.resize(samples.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= size()) throw InvalidArgument("sample index out of range");
    out.samples.col(static_cast<Eigen::Index>(k)) = samples.col(static_cast<Eigen::Index>(indices[k]));
    out.labels.push_back(labels[indices[k]]);
  }
  return out;
}

}  // namespace blab
