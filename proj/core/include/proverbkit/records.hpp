#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/corpus.hpp"

namespace proverbkit {

using Json = nlohmann::json;

// JSON mappings for the corpus types. Parsing throws DataError.
void to_json(Json& j, const ProverbEntry& p);
void from_json(const Json& j, ProverbEntry& p);
void to_json(Json& j, const SentencePair& p);
void from_json(const Json& j, SentencePair& p);
void to_json(Json& j, const MinedCandidate& c);
void from_json(const Json& j, MinedCandidate& c);
void to_json(Json& j, const ScoredCandidate& c);
void from_json(const Json& j, ScoredCandidate& c);
void to_json(Json& j, const ContextWindow& w);
void from_json(const Json& j, ContextWindow& w);

namespace records {

/// Calls `fn(line_number, record)` for every non-blank line (1-based numbers).
/// Any exception escaping `fn` or the JSON parser is rethrown as a DataError
/// prefixed with "<path>:<line>:".
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const Json&)>& fn);

/// Reads every record of a line-delimited file.
std::vector<Json> read_lines(const std::filesystem::path& path);

/// Serializes one record per line. The file is replaced atomically.
void write_lines(const std::filesystem::path& path, const std::vector<Json>& rows);

/// Pretty-printed single JSON document, replaced atomically.
void write_document(const std::filesystem::path& path, const Json& doc);
Json read_document(const std::filesystem::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

template <typename T>
std::vector<T> read_as(const std::filesystem::path& path) {
  std::vector<T> out;
  for_each_line(path, [&](std::size_t, const Json& j) { out.push_back(j.get<T>()); });
  return out;
}

template <typename T>
void write_as(const std::filesystem::path& path, const std::vector<T>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.emplace_back(item);
  write_lines(path, rows);
}

/// Stable identifier "doc_id#line_idx" used to join records across stages.
std::string pair_key(const SentencePair& pair);

}  // namespace records
}  // namespace proverbkit
