#include "blab/checkpoint.hpp"

#include "blab/errors.hpp"
#include "blab/io.hpp"

#include <bit>
#include <vector>

namespace blab {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

void put_f64(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int shift = 0; shift < 64; shift += 8) out.push_back(static_cast<char>((bits >> shift) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t take(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw DataError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k)
      v |= std::uint64_t{static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(k)])} << (8 * k);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  double f64() { return std::bit_cast<double>(take(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Mlpd& net) {
  std::string out = "BLAB";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.weights.rows()));
    put_u32(out, static_cast<std::uint32_t>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_f64(out, layer.weights(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f64(out, layer.bias(r));
  }
  return out;
}

Mlpd decode_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, 4) != "BLAB") throw BadMagic("checkpoint does not start with BLAB");
  Reader in(bytes.substr(4));
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint format version " + std::to_string(version) + " is not supported");
  const std::uint32_t count = in.u32();
  if (count == 0) throw DataError("checkpoint holds no layers");
  std::vector<DenseLayer<double>> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    if (std::uint64_t{rows} * cols * 8 > bytes.size()) throw DataError("checkpoint layer shape exceeds file size");
    DenseLayer<double> layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) layer.weights(r, c) = in.f64();
    for (std::uint32_t r = 0; r < rows; ++r) layer.bias(r) = in.f64();
    layers.push_back(std::move(layer));
  }
  if (!in.done()) throw DataError("trailing bytes after checkpoint payload");
  try {
    return Mlpd(std::move(layers));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint describes an invalid network: ") + e.what());
  }
}

void save_checkpoint(const Mlpd& net, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(net));
}

Mlpd load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace blab
