#include "blab/manifest.hpp"

#include "blab/errors.hpp"
#include "blab/experiments.hpp"
#include "blab/io.hpp"

#include <chrono>
#include <ctime>

namespace blab {

nlohmann::json to_json(const RunManifest& m) {
  return {{"format_version", m.format_version},
          {"tool_version", m.tool_version},
          {"command", m.command},
          {"status", m.status},
          {"started", m.started},
          {"finished", m.finished},
          {"error", m.error},
          {"completed_iterations", m.completed_iterations},
          {"config", m.config},
          {"details", m.details}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kRunFormatVersion)
      throw DataError("manifest format version " + std::to_string(m.format_version) + " is not supported (expected " +
                      std::to_string(kRunFormatVersion) + ")");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.error = j.at("error").get<std::string>();
    m.completed_iterations = j.at("completed_iterations").get<int>();
    m.config = j.at("config").get<std::string>();
    m.details = j.at("details");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  write_file_atomic(dir / "manifest.json", to_json(manifest).dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& dir) {
  const std::string text = read_file(dir / "manifest.json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt manifest " + (dir / "manifest.json").string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

}  // namespace blab
