#include "proverbkit/manifest.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <cstring>

#include "proverbkit/error.hpp"
#include "proverbkit/modelclient.hpp"
#include "proverbkit/records.hpp"

#ifndef PROVERBKIT_VERSION
#define PROVERBKIT_VERSION "0.0.0"
#endif

namespace proverbkit {

std::string tool_version() { return PROVERBKIT_VERSION; }

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    long long v = 0;
    const char* end = epoch + std::strlen(epoch);
    auto [ptr, ec] = std::from_chars(epoch, end, v);
    if (ec != std::errc{} || ptr != end || v < 0) {
      throw ValidationError("SOURCE_DATE_EPOCH is not a non-negative integer");
    }
    t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json default_parameters() {
  return {{"mining_threshold", 0.8},
          {"token_scheme", "whitespace"},
          {"match_granularity", "character"},
          {"zh_lemmatization", "identity (lowercase only)"},
          {"max_per_direction", 2000},
          {"min_score", 4.0},
          {"qe_weight", 5.0},
          {"quantile_method", "nearest-rank"},
          {"keep_rule", "overall >= threshold"},
          {"context_max_each", 5},
          {"dialogue_rounds_max", 5},
          {"tau", 0.5},
          {"gamma_cutoff", 0.9},
          {"lcs_unit", "token"},
          {"cos_diff_max", 0.05},
          {"metric_diff_min", {{"COMET", 10.0}, {"BLEU", 5.0}, {"CHRFPP", 10.0}}},
          {"judge_tie_handling", "ties in denominator; no-tie summary also emitted"},
          {"temperature", 0.0}};
}

void to_json(nlohmann::json& j, const RunManifest& m) {
  auto files = [](const std::vector<FileDigest>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : v) arr.push_back({{"name", f.name}, {"sha256", f.sha256}});
    return arr;
  };
  j = {{"command", m.command},
       {"config_digest", m.config_digest},
       {"tool_version", m.tool_version},
       {"seeds", m.seeds},
       {"parameters", m.parameters},
       {"inputs", files(m.inputs)},
       {"outputs", files(m.outputs)},
       {"started_at", m.started_at},
       {"finished_at", m.finished_at}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  auto files = [](const nlohmann::json& arr) {
    std::vector<FileDigest> v;
    for (const auto& f : arr) v.push_back({f.at("name").get<std::string>(), f.at("sha256").get<std::string>()});
    return v;
  };
  try {
    m.command = j.at("command").get<std::string>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.parameters = j.at("parameters");
    m.inputs = files(j.at("inputs"));
    m.outputs = files(j.at("outputs"));
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad manifest: ") + e.what());
  }
}

FileDigest digest_file(const std::filesystem::path& path) {
  return {path.filename().string(), sha256_hex(records::read_file(path))};
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  records::write_document(path, manifest);
}

RunManifest read_manifest(const std::filesystem::path& path) {
  return records::read_document(path).get<RunManifest>();
}

nlohmann::json tagged_document(std::string_view schema, nlohmann::json body) {
  body["schema"] = schema;
  body["tool_version"] = tool_version();
  return body;
}

}  // namespace proverbkit
