#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "harness/config.hpp"

namespace heatest::harness {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Everything needed to rerun a command and check its outputs.
struct RunManifest {
  std::string command;
  Json config;
  std::string version;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  /// (file name relative to the output directory, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;

  /// Hashes `file` inside `dir` and records it.
  void record(const std::filesystem::path& dir, const std::string& file);
  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

std::string utc_timestamp();
std::string version_tag();

/// Writes manifest.json into `dir`.
void write_manifest(const std::filesystem::path& dir, const RunManifest& m);

}  // namespace heatest::harness
