#pragma once

// INI-style experiment configuration: `[section]` headers, `key = value`
// lines, `;` or `#` comments. Lists are comma separated.

#include "blab/experiments.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace blab {

/// Throws ConfigError naming the offending key on unknown sections or keys,
/// duplicates and malformed values.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key in a fixed order; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Sets one key given as `section.key` or as a bare key that names exactly
/// one entry across all sections.
void apply_override(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// All keys as `section.key`.
std::vector<std::string> config_keys();

}  // namespace blab
