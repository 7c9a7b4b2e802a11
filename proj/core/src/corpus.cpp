#include "proverbkit/corpus.hpp"

#include <algorithm>
#include <unordered_map>

#include "proverbkit/error.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kP1: return "P1";
    case Phase::kP2: return "P2";
    case Phase::kP3: return "P3";
  }
  return "P1";
}

Phase phase_from_string(std::string_view text) {
  if (text == "P1") return Phase::kP1;
  if (text == "P2") return Phase::kP2;
  if (text == "P3") return Phase::kP3;
  throw DataError("unknown phase '" + std::string(text) + "'");
}

void MinedCandidate::advance(Phase next) {
  if (static_cast<int>(next) < static_cast<int>(phase)) {
    throw ValidationError("phase cannot move from " + std::string(to_string(phase)) + " to " +
                          std::string(to_string(next)));
  }
  phase = next;
}

Corpus::Corpus(std::vector<SentencePair> pairs) {
  for (auto& p : pairs) docs_[p.doc_id].push_back(std::move(p));
  for (auto& [doc_id, doc] : docs_) {
    std::sort(doc.begin(), doc.end(),
              [](const SentencePair& a, const SentencePair& b) { return a.line_idx < b.line_idx; });
    auto dup = std::adjacent_find(doc.begin(), doc.end(), [](const auto& a, const auto& b) {
      return a.line_idx == b.line_idx;
    });
    if (dup != doc.end()) {
      throw DataError("duplicate key (" + doc_id + ", " + std::to_string(dup->line_idx) + ")");
    }
    size_ += doc.size();
  }
}

const SentencePair* Corpus::find(std::string_view doc_id, std::size_t line_idx) const {
  auto it = docs_.find(std::string(doc_id));
  if (it == docs_.end()) return nullptr;
  const auto& doc = it->second;
  auto pos = std::lower_bound(doc.begin(), doc.end(), line_idx,
                              [](const SentencePair& p, std::size_t idx) { return p.line_idx < idx; });
  if (pos == doc.end() || pos->line_idx != line_idx) return nullptr;
  return &*pos;
}

std::vector<SentencePair> Corpus::pairs() const {
  std::vector<SentencePair> out;
  out.reserve(size_);
  for (const auto& [_, doc] : docs_) out.insert(out.end(), doc.begin(), doc.end());
  return out;
}

std::set<std::string> Corpus::source_languages() const {
  std::set<std::string> langs;
  for (const auto& [_, doc] : docs_) {
    for (const auto& p : doc) langs.insert(p.src_lang);
  }
  return langs;
}

std::vector<ProverbEntry> load_proverbs(const std::filesystem::path& path,
                                        const std::set<std::string>& languages) {
  std::vector<ProverbEntry> out;
  std::unordered_map<std::string, std::size_t> seen;
  records::for_each_line(path, [&](std::size_t line_no, const Json& j) {
    auto entry = j.get<ProverbEntry>();
    if (utf8::trim(entry.text).empty()) throw DataError("empty proverb text");
    if (!languages.empty() && !languages.contains(entry.language)) {
      throw DataError("language '" + entry.language + "' is not configured");
    }
    auto [it, inserted] = seen.emplace(entry.id, line_no);
    if (!inserted) {
      throw DataError("duplicate proverb id '" + entry.id + "' (first seen at line " +
                      std::to_string(it->second) + ")");
    }
    out.push_back(std::move(entry));
  });
  return out;
}

Corpus load_bitext(const std::filesystem::path& path) {
  std::vector<SentencePair> pairs;
  std::map<std::pair<std::string, std::size_t>, std::size_t> seen;
  records::for_each_line(path, [&](std::size_t line_no, const Json& j) {
    auto pair = j.get<SentencePair>();
    auto [it, inserted] = seen.emplace(std::make_pair(pair.doc_id, pair.line_idx), line_no);
    if (!inserted) {
      throw DataError("duplicate key (" + pair.doc_id + ", " + std::to_string(pair.line_idx) +
                      ") at lines " + std::to_string(it->second) + " and " +
                      std::to_string(line_no));
    }
    pairs.push_back(std::move(pair));
  });
  return Corpus(std::move(pairs));
}

void save_bitext(const Corpus& corpus, const std::filesystem::path& path) {
  records::write_as(path, corpus.pairs());
}

void save_proverbs(const std::vector<ProverbEntry>& proverbs, const std::filesystem::path& path) {
  records::write_as(path, proverbs);
}

ContextWindow retrieve_context(const Corpus& corpus, const SentencePair& focal,
                               std::size_t max_each) {
  auto doc_it = corpus.documents().find(focal.doc_id);
  if (doc_it == corpus.documents().end()) {
    throw DataError("focal pair " + records::pair_key(focal) + " not in corpus");
  }
  const auto& doc = doc_it->second;
  auto pos = std::lower_bound(doc.begin(), doc.end(), focal.line_idx,
                              [](const SentencePair& p, std::size_t idx) { return p.line_idx < idx; });
  if (pos == doc.end() || pos->line_idx != focal.line_idx) {
    throw DataError("focal pair " + records::pair_key(focal) + " not in corpus");
  }
  const auto index = static_cast<std::size_t>(pos - doc.begin());
  const std::size_t first = index >= max_each ? index - max_each : 0;
  const std::size_t last = std::min(doc.size(), index + 1 + max_each);

  ContextWindow window;
  window.prior.assign(doc.begin() + static_cast<std::ptrdiff_t>(first), pos);
  window.following.assign(pos + 1, doc.begin() + static_cast<std::ptrdiff_t>(last));
  return window;
}

}  // namespace proverbkit
