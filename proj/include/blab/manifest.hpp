#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace blab {

/// manifest.json of a run directory.
struct RunManifest {
  int format_version = 1;
  std::string tool_version;
  std::string command;
  /// Serialized config (INI text) of every resolved parameter.
  std::string config;
  std::string started;
  std::string finished;
  /// running | complete | aborted
  std::string status = "running";
  std::string error;
  int completed_iterations = 0;
  /// Command-specific payload (iteration log, report).
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& manifest);

/// Throws DataError on malformed JSON, missing fields or a format version
/// other than kRunFormatVersion.
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& dir);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace blab
