#include "blab/data.hpp"

#include "blab/errors.hpp"
#include "blab/io.hpp"
#include "blab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace blab {
namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_be32(const std::string& bytes, std::size_t offset) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void append_be32(std::string& out, std::uint32_t value) {
  out.push_back(static_cast<char>((value >> 24) & 0xff));
  out.push_back(static_cast<char>((value >> 16) & 0xff));
  out.push_back(static_cast<char>((value >> 8) & 0xff));
  out.push_back(static_cast<char>(value & 0xff));
}

void check_magic(const std::string& bytes, std::uint32_t expected, const std::filesystem::path& path) {
  if (bytes.size() < 4) throw TruncatedFile(path.string() + ": file shorter than the IDX magic number");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected)
    throw BadMagic(path.string() + ": magic " + std::to_string(magic) + ", expected " + std::to_string(expected));
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const std::string images = read_file(images_path);
  const std::string labels = read_file(labels_path);
  check_magic(images, kImageMagic, images_path);
  check_magic(labels, kLabelMagic, labels_path);
  if (images.size() < 16) throw TruncatedFile(images_path.string() + ": truncated IDX header");
  if (labels.size() < 8) throw TruncatedFile(labels_path.string() + ": truncated IDX header");

  const std::uint64_t count = read_be32(images, 4);
  const std::uint64_t rows = read_be32(images, 8);
  const std::uint64_t cols = read_be32(images, 12);
  const std::uint64_t label_count = read_be32(labels, 4);
  const std::uint64_t pixels = rows * cols;
  if (images.size() < 16 + count * pixels)
    throw TruncatedFile(images_path.string() + ": expected " + std::to_string(count) + " images of " +
                        std::to_string(pixels) + " bytes");
  if (labels.size() < 8 + label_count) throw TruncatedFile(labels_path.string() + ": truncated label payload");
  if (label_count != count)
    throw CountMismatch(images_path.string() + " holds " + std::to_string(count) + " images but " +
                        labels_path.string() + " holds " + std::to_string(label_count) + " labels");
  if (pixels == 0) throw DataError(images_path.string() + ": zero-sized images");

  Dataset out;
  out.name = images_path.filename().string();
  out.samples.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(count));
  out.labels.resize(count);
  const auto* payload = reinterpret_cast<const unsigned char*>(images.data()) + 16;
  for (std::uint64_t i = 0; i < count; ++i) {
    for (std::uint64_t p = 0; p < pixels; ++p)
      out.samples(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          static_cast<double>(payload[i * pixels + p]) / 255.0;
    out.labels[i] = static_cast<unsigned char>(labels[8 + i]);
  }
  return out;
}

void write_idx(const Dataset& data, int rows, int cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  data.validate(false);
  if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(rows) * cols != data.dim())
    throw InvalidArgument("IDX image shape does not match the sample dimension");
  std::string images;
  append_be32(images, kImageMagic);
  append_be32(images, static_cast<std::uint32_t>(data.size()));
  append_be32(images, static_cast<std::uint32_t>(rows));
  append_be32(images, static_cast<std::uint32_t>(cols));
  std::string labels;
  append_be32(labels, kLabelMagic);
  append_be32(labels, static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index p = 0; p < data.dim(); ++p) {
      const double v = data.samples(p, static_cast<Eigen::Index>(i));
      if (v < 0.0 || v > 1.0) throw InvalidArgument("IDX export needs features in [0, 1]");
      images.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
    if (data.labels[i] < 0 || data.labels[i] > 255) throw InvalidArgument("IDX labels must fit in a byte");
    labels.push_back(static_cast<char>(static_cast<unsigned char>(data.labels[i])));
  }
  write_file_atomic(images_path, images);
  write_file_atomic(labels_path, labels);
}

Dataset filter_binary(const Dataset& data, int class_a, int class_b) {
  if (class_a == class_b) throw InvalidArgument("filter_binary needs two different classes");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] == class_a || data.labels[i] == class_b) keep.push_back(i);
  Dataset out = data.select(keep);
  bool seen_a = false;
  bool seen_b = false;
  for (int& label : out.labels) {
    seen_a |= label == class_a;
    seen_b |= label == class_b;
    label = label == class_a ? 0 : 1;
  }
  if (!seen_a) throw InvalidArgument("class " + std::to_string(class_a) + " is absent");
  if (!seen_b) throw InvalidArgument("class " + std::to_string(class_b) + " is absent");
  out.name = data.name + "[" + std::to_string(class_a) + "v" + std::to_string(class_b) + "]";
  return out;
}

std::vector<std::size_t> sample_balanced_indices(const Dataset& data, std::size_t total, std::uint64_t seed,
                                                 const std::vector<std::size_t>& exclude) {
  if (total == 0 || total % 2 != 0) throw InvalidArgument("balanced sample size must be even and positive");
  std::vector<bool> excluded(data.size(), false);
  for (std::size_t i : exclude)
    if (i < data.size()) excluded[i] = true;
  const std::size_t per_class = total / 2;
  SplitMix64 rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(total);
  for (int label : {0, 1}) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.labels[i] == label && !excluded[i]) pool.push_back(i);
    if (pool.size() < per_class)
      throw InvalidArgument("class " + std::to_string(label) + " has " + std::to_string(pool.size()) +
                            " samples, " + std::to_string(per_class) + " requested");
    // Partial Fisher-Yates: the first per_class slots become the sample.
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Dataset sample_balanced(const Dataset& data, std::size_t total, std::uint64_t seed) {
  return data.select(sample_balanced_indices(data, total, seed));
}

Dataset gen_gaussian_blobs(Eigen::Index dim, std::size_t per_class, const Eigen::VectorXd& center0,
                           const Eigen::VectorXd& center1, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  if (dim < 1 || center0.size() != dim || center1.size() != dim)
    throw DimensionMismatch("blob centers must have the requested dimension");
  if (per_class == 0) throw InvalidArgument("per_class must be positive");
  SplitMix64 rng(seed);
  Dataset out;
  out.name = "blobs";
  out.samples.resize(dim, static_cast<Eigen::Index>(2 * per_class));
  out.labels.resize(2 * per_class);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    const Eigen::VectorXd& center = label == 0 ? center0 : center1;
    for (Eigen::Index d = 0; d < dim; ++d)
      out.samples(d, static_cast<Eigen::Index>(i)) = center(d) + sigma * rng.normal();
    out.labels[i] = label;
  }
  return out;
}

namespace {

Dataset planar(std::initializer_list<std::array<double, 2>> points, std::initializer_list<int> labels,
               std::string name) {
  Dataset out;
  out.name = std::move(name);
  out.samples.resize(2, static_cast<Eigen::Index>(points.size()));
  Eigen::Index c = 0;
  for (const auto& p : points) {
    out.samples(0, c) = p[0];
    out.samples(1, c) = p[1];
    ++c;
  }
  out.labels.assign(labels);
  return out;
}

}  // namespace

SymmetricLayout gen_symmetric_layout(LayoutKind kind, const std::optional<Dataset>& points) {
  switch (kind) {
    case LayoutKind::square_xor:
      return {kind, planar({{1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0, 0, 1, 1}, "square_xor"),
              "every point is equidistant from both diagonals |x1| = |x2|; each admits two projections"};
    case LayoutKind::mirrored_pairs:
      return {kind, planar({{-1, 1}, {-1, -1}, {1, 1}, {1, -1}}, {0, 0, 1, 1}, "mirrored_pairs"),
              "invariant under the reflection x2 -> -x2"};
    case LayoutKind::custom:
      if (!points || points->size() == 0) throw InvalidArgument("custom layout needs points");
      points->validate();
      return {kind, *points, "custom layout; symmetry not certified"};
  }
  throw InvalidArgument("unknown layout kind");
}

Dataset perturb_layout(const Dataset& layout, std::size_t index, const Eigen::Vector2d& shift) {
  if (layout.dim() != 2) throw DimensionMismatch("layouts are planar");
  if (index >= layout.size()) throw InvalidArgument("layout index out of range");
  Dataset out = layout;
  out.samples.col(static_cast<Eigen::Index>(index)) += shift;
  out.name = layout.name + "+perturbed";
  return out;
}

LayoutKind parse_layout_kind(std::string_view name) {
  if (name == "square_xor") return LayoutKind::square_xor;
  if (name == "mirrored_pairs") return LayoutKind::mirrored_pairs;
  if (name == "custom") return LayoutKind::custom;
  throw InvalidArgument("unknown layout kind '" + std::string(name) + "'");
}

std::string_view to_string(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::square_xor: return "square_xor";
    case LayoutKind::mirrored_pairs: return "mirrored_pairs";
    case LayoutKind::custom: return "custom";
  }
  return "custom";
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::string out = "label";
  for (Eigen::Index d = 0; d < data.dim(); ++d) out += ",f" + std::to_string(d);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.labels[i]);
    for (Eigen::Index d = 0; d < data.dim(); ++d) {
      out += ',';
      out += format_double(data.samples(d, static_cast<Eigen::Index>(i)));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("label", 0) != 0)
    throw DataError(path.string() + ": missing 'label,f0,...' header");
  const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  if (dim < 1) throw DataError(path.string() + ": header names no features");
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    std::vector<std::string_view> fields;
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (static_cast<Eigen::Index>(fields.size()) != dim + 1)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                      " fields");
    try {
      const double label = parse_double(fields[0]);
      if (label != std::floor(label)) throw InvalidArgument("fractional label");
      labels.push_back(static_cast<int>(label));
      for (std::size_t f = 1; f < fields.size(); ++f) values.push_back(parse_double(fields[f]));
    } catch (const InvalidArgument& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  Dataset out;
  out.name = path.stem().string();
  out.labels = std::move(labels);
  out.samples = Eigen::Map<Eigen::MatrixXd>(values.data(), dim, static_cast<Eigen::Index>(out.labels.size()));
  return out;
}

std::pair<Dataset, Dataset> split_halves(const Dataset& data) {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::size_t seen[2] = {0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.labels[i];
    if (label != 0 && label != 1) throw InvalidArgument("split_halves needs binary labels");
    (seen[label]++ % 2 == 0 ? first : second).push_back(i);
  }
  Dataset a = data.select(first);
  Dataset b = data.select(second);
  a.name = data.name + "/half0";
  b.name = data.name + "/half1";
  return {std::move(a), std::move(b)};
}

}  // namespace blab
