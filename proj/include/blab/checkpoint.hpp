#pragma once

#include "blab/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace blab {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Model checkpoint, little-endian:
///   "BLAB" | version u32 | layer count u32 |
///   per layer: rows u32 | cols u32 | rows*cols f64 (row-major) | rows f64 bias
std::string encode_checkpoint(const Mlpd& net);
Mlpd decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Mlpd& net, const std::filesystem::path& path);
Mlpd load_checkpoint(const std::filesystem::path& path);

}  // namespace blab
