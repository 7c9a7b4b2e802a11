#include "proverbkit/textnorm.hpp"

#include <fstream>
#include <utility>

#include "proverbkit/error.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {
namespace {

std::vector<std::string> split_whitespace(std::u32string_view cps) {
  std::vector<std::string> out;
  std::string cur;
  for (char32_t cp : cps) {
    if (utf8::is_space(cp)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      utf8::append(cur, cp);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Emulates re.sub for a two-character pattern: left-to-right, non-overlapping.
template <typename Match, typename Emit>
std::u32string sub_pairs(const std::u32string& in, Match match, Emit emit) {
  std::u32string out;
  out.reserve(in.size() + in.size() / 2);
  std::size_t i = 0;
  while (i < in.size()) {
    if (i + 1 < in.size() && match(in[i], in[i + 1])) {
      emit(out, in[i], in[i + 1]);
      i += 2;
    } else {
      out.push_back(in[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

TokenScheme token_scheme_from_string(std::string_view text) {
  if (text == "whitespace") return TokenScheme::kWhitespace;
  if (text == "intl") return TokenScheme::kIntl;
  throw ValidationError("unknown token scheme '" + std::string(text) + "'");
}

std::string_view to_string(TokenScheme scheme) {
  return scheme == TokenScheme::kIntl ? "intl" : "whitespace";
}

TokenSequence::TokenSequence(std::vector<std::string> tokens) {
  tokens_.reserve(tokens.size());
  for (auto& t : tokens) {
    if (t.empty()) continue;
    if (!joined_.empty()) joined_ += ' ';
    joined_ += t;
    tokens_.push_back(std::move(t));
  }
}

std::string intl_tokenize(std::string_view text) {
  std::u32string line = utf8::decode(text);
  // (\P{N})(\p{P}) -> "\1 \2 "
  line = sub_pairs(
      line, [](char32_t a, char32_t b) { return !utf8::is_number(a) && utf8::is_punct(b); },
      [](std::u32string& out, char32_t a, char32_t b) {
        out.push_back(a);
        out.push_back(U' ');
        out.push_back(b);
        out.push_back(U' ');
      });
  // (\p{P})(\P{N}) -> " \1 \2"
  line = sub_pairs(
      line, [](char32_t a, char32_t b) { return utf8::is_punct(a) && !utf8::is_number(b); },
      [](std::u32string& out, char32_t a, char32_t b) {
        out.push_back(U' ');
        out.push_back(a);
        out.push_back(U' ');
        out.push_back(b);
      });
  // (\p{S}) -> " \1 "
  std::u32string spaced;
  spaced.reserve(line.size());
  for (char32_t cp : line) {
    if (utf8::is_symbol(cp)) {
      spaced.push_back(U' ');
      spaced.push_back(cp);
      spaced.push_back(U' ');
    } else {
      spaced.push_back(cp);
    }
  }
  std::string out;
  for (const auto& tok : split_whitespace(spaced)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

TokenSequence tokenize(std::string_view text, TokenScheme scheme, std::string_view language) {
  if (scheme == TokenScheme::kIntl) {
    return TokenSequence(split_whitespace(utf8::decode(intl_tokenize(text))));
  }
  const std::u32string cps = utf8::decode(text);
  auto tokens = split_whitespace(cps);
  if (language == "zh" && tokens.size() == 1 && utf8::length(tokens.front()) > 4) {
    std::vector<std::string> chars;
    for (char32_t cp : utf8::decode(tokens.front())) {
      std::string c;
      utf8::append(c, cp);
      chars.push_back(std::move(c));
    }
    return TokenSequence(std::move(chars));
  }
  return TokenSequence(std::move(tokens));
}

RuleTableLemmatizer::RuleTableLemmatizer(std::unordered_map<std::string, std::string> table,
                                         std::set<std::string> languages)
    : languages_(std::move(languages)) {
  for (auto& [surface, lemma] : table) {
    std::string key = utf8::to_lower(surface);
    std::string value = utf8::to_lower(lemma);
    if (key.empty() || value.empty()) throw DataError("empty entry in lemma table");
    table_[std::move(key)] = std::move(value);
  }
  // Resolve chains to their fixed point.
  for (auto& [surface, lemma] : table_) {
    std::set<std::string> visited{surface};
    std::string cur = lemma;
    for (auto it = table_.find(cur); it != table_.end() && it->first != it->second;
         it = table_.find(cur)) {
      if (!visited.insert(cur).second) {
        throw DataError("cycle in lemma table at '" + surface + "'");
      }
      cur = it->second;
    }
    lemma = cur;
  }
}

RuleTableLemmatizer RuleTableLemmatizer::from_file(const std::filesystem::path& path,
                                                   std::set<std::string> languages) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unordered_map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 'surface<TAB>lemma'");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return RuleTableLemmatizer(std::move(table), std::move(languages));
}

bool RuleTableLemmatizer::supports(std::string_view language) const {
  return languages_.contains(std::string(language));
}

std::string RuleTableLemmatizer::lemma(std::string_view lowered_token) const {
  auto it = table_.find(std::string(lowered_token));
  return it == table_.end() ? std::string(lowered_token) : it->second;
}

TokenSequence lemmatize(const TokenSequence& seq, const Lemmatizer& lemmatizer,
                        std::string_view language) {
  if (!lemmatizer.supports(language)) {
    throw ValidationError(lemmatizer.name() + " lemmatizer does not support language '" +
                          std::string(language) + "'");
  }
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& tok : seq.tokens()) {
    out.push_back(lemmatizer.lemma(utf8::to_lower(tok)));
  }
  return TokenSequence(std::move(out));
}

}  // namespace proverbkit
