#include "proverbkit/records.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <system_error>
#include <thread>

#include "proverbkit/error.hpp"

namespace proverbkit {
namespace {

template <typename T>
T required(const Json& j, const char* key) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T optional(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t required_index(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    throw DataError(std::string("field '") + key + "' must be a non-negative integer");
  }
  const auto value = it->get<long long>();
  if (value < 0) throw DataError(std::string("field '") + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(value);
}

}  // namespace

void to_json(Json& j, const ProverbEntry& p) {
  j = Json{{"id", p.id},
           {"text", p.text},
           {"language", p.language},
           {"explanation", p.explanation},
           {"figurative", p.figurative},
           {"equivalents", p.equivalents}};
}

void from_json(const Json& j, ProverbEntry& p) {
  p.id = required<std::string>(j, "id");
  p.text = required<std::string>(j, "text");
  p.language = required<std::string>(j, "language");
  p.explanation = optional<std::string>(j, "explanation", "");
  p.figurative = optional<bool>(j, "figurative", false);
  p.equivalents = optional<std::vector<std::string>>(j, "equivalents", {});
}

void to_json(Json& j, const SentencePair& p) {
  j = Json{{"doc_id", p.doc_id},     {"line_idx", p.line_idx}, {"source", p.source},
           {"target", p.target},     {"src_lang", p.src_lang}, {"tgt_lang", p.tgt_lang}};
}

void from_json(const Json& j, SentencePair& p) {
  p.doc_id = required<std::string>(j, "doc_id");
  p.line_idx = required_index(j, "line_idx");
  p.source = required<std::string>(j, "source");
  p.target = required<std::string>(j, "target");
  p.src_lang = optional<std::string>(j, "src_lang", "");
  p.tgt_lang = optional<std::string>(j, "tgt_lang", "");
}

void to_json(Json& j, const MinedCandidate& c) {
  j = Json{{"pair", c.pair},
           {"proverb_id", c.proverb_id},
           {"match_score", c.match_score},
           {"phase", std::string(to_string(c.phase))}};
}

void from_json(const Json& j, MinedCandidate& c) {
  if (!j.is_object() || !j.contains("pair")) throw DataError("missing field 'pair'");
  c.pair = j.at("pair").get<SentencePair>();
  c.proverb_id = required<std::string>(j, "proverb_id");
  c.match_score = required<double>(j, "match_score");
  c.phase = phase_from_string(optional<std::string>(j, "phase", "P1"));
}

void to_json(Json& j, const ScoredCandidate& c) {
  j = Json{{"candidate", c.candidate},
           {"llm_qe", c.llm_qe},
           {"da_qe", c.da_qe},
           {"overall", c.overall}};
}

void from_json(const Json& j, ScoredCandidate& c) {
  if (!j.is_object() || !j.contains("candidate")) throw DataError("missing field 'candidate'");
  c.candidate = j.at("candidate").get<MinedCandidate>();
  c.llm_qe = required<double>(j, "llm_qe");
  c.da_qe = required<double>(j, "da_qe");
  c.overall = required<double>(j, "overall");
}

void to_json(Json& j, const ContextWindow& w) {
  j = Json{{"prior", w.prior}, {"following", w.following}};
}

void from_json(const Json& j, ContextWindow& w) {
  w.prior = optional<std::vector<SentencePair>>(j, "prior", {});
  w.following = optional<std::vector<SentencePair>>(j, "following", {});
}

namespace records {

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(line_no, Json::parse(line));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::vector<Json> read_lines(const std::filesystem::path& path) {
  std::vector<Json> rows;
  for_each_line(path, [&](std::size_t, const Json& j) { rows.push_back(j); });
  return rows;
}

void write_lines(const std::filesystem::path& path, const std::vector<Json>& rows) {
  std::string out;
  for (const auto& row : rows) {
    out += row.dump(-1, ' ', false, Json::error_handler_t::replace);
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_document(const std::filesystem::path& path, const Json& doc) {
  write_file_atomic(path, doc.dump(2, ' ', false, Json::error_handler_t::replace) + "\n");
}

Json read_document(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::atomic<unsigned long> counter{0};
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    const std::string reason = ec.message();
    fs::remove(tmp, ec);
    throw DataError("cannot replace " + path.string() + ": " + reason);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string pair_key(const SentencePair& pair) {
  return pair.doc_id + "#" + std::to_string(pair.line_idx);
}

}  // namespace records
}  // namespace proverbkit
