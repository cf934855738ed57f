#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace dkd::io {

inline constexpr const char* kToolVersion = "0.3.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// What produced a report. The deterministic part (command, config, input
/// digests, version) is embedded in every summary; timing lives only in
/// manifest.json, which is written last as the completion marker.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_digests;  ///< path -> sha256
  std::string tool_version = kToolVersion;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void add_input(const std::filesystem::path& path);

  /// Deterministic fields only.
  [[nodiscard]] nlohmann::ordered_json provenance() const;
};

/// Writes `<dir>/manifest.json` including start time and wall-clock duration.
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

/// Writes pretty-printed JSON followed by a newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& value);

}  // namespace dkd::io
