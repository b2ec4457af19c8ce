#pragma once

#include "blab/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blab {

/// Reads an IDX image file (magic 2051) and its IDX label file (magic 2049).
/// Pixels are scaled to [0, 1] and each image is flattened row-major into
/// one column. Labels keep their original values (0-9 for MNIST).
/// Throws BadMagic, TruncatedFile or CountMismatch.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes `data` as an IDX pair, quantizing features to round(255 * v).
/// Features must lie in [0, 1] and rows * cols must equal the dimension.
void write_idx(const Dataset& data, int rows, int cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Keeps the samples of two original classes in their original order and
/// relabels class_a -> 0, class_b -> 1.
Dataset filter_binary(const Dataset& data, int class_a, int class_b);

/// Indices (ascending) of `total / 2` samples per label drawn without
/// replacement with SplitMix64(seed). `exclude` lists indices that may not
/// be drawn.
std::vector<std::size_t> sample_balanced_indices(const Dataset& data, std::size_t total, std::uint64_t seed,
                                                 const std::vector<std::size_t>& exclude = {});

Dataset sample_balanced(const Dataset& data, std::size_t total, std::uint64_t seed);

/// `per_class` isotropic normal samples around each center (class 0 first).
Dataset gen_gaussian_blobs(Eigen::Index dim, std::size_t per_class, const Eigen::VectorXd& center0,
                           const Eigen::VectorXd& center1, double sigma, std::uint64_t seed);

enum class LayoutKind { square_xor, mirrored_pairs, custom };

struct SymmetricLayout {
  LayoutKind kind = LayoutKind::custom;
  Dataset data;
  std::string symmetry_note;
};

/// square_xor: class 0 at (+-1, 0), class 1 at (0, +-1).
/// mirrored_pairs: class 0 at (-1, +-1), class 1 at (1, +-1), invariant
/// under the reflection x2 -> -x2.
/// custom: wraps `points`, which must be given.
SymmetricLayout gen_symmetric_layout(LayoutKind kind, const std::optional<Dataset>& points = std::nullopt);

/// Copy of `layout` with sample `index` moved by `shift`.
Dataset perturb_layout(const Dataset& layout, std::size_t index, const Eigen::Vector2d& shift);

LayoutKind parse_layout_kind(std::string_view name);
std::string_view to_string(LayoutKind kind);

/// CSV with header `label,f0,f1,...`; values in shortest round-trip form.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Splits a dataset into two disjoint halves with equal per-class counts
/// (alternating assignment within each class, in order).
std::pair<Dataset, Dataset> split_halves(const Dataset& data);

}  // namespace blab
