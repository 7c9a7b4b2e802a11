#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace proverbkit {

std::string tool_version();

/// UTC time as "YYYY-MM-DDTHH:MM:SSZ". SOURCE_DATE_EPOCH, when set, replaces the clock.
std::string utc_timestamp();

/// Every default the toolkit applies, keyed by parameter name.
nlohmann::json default_parameters();

struct FileDigest {
  std::string name;  // file name only, so manifests do not depend on the run directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string config_digest;
  std::string tool_version;
  std::map<std::string, std::uint64_t> seeds;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string started_at;
  std::string finished_at;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

FileDigest digest_file(const std::filesystem::path& path);

/// "<output>.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Wraps a stage summary document with its schema tag and tool version.
nlohmann::json tagged_document(std::string_view schema, nlohmann::json body);

}  // namespace proverbkit
