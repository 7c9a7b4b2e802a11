#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace proverbkit {

enum class TokenScheme {
  kWhitespace,  // split on Unicode whitespace
  kIntl,        // additionally isolate punctuation and symbols (mteval-v14 international rules)
};

TokenScheme token_scheme_from_string(std::string_view text);
std::string_view to_string(TokenScheme scheme);

/// Ordered non-empty tokens; `joined()` is the single-space concatenation.
class TokenSequence {
 public:
  TokenSequence() = default;
  /// Empty tokens are dropped.
  explicit TokenSequence(std::vector<std::string> tokens);

  [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }
  [[nodiscard]] const std::string& joined() const { return joined_; }
  [[nodiscard]] std::size_t size() const { return tokens_.size(); }
  [[nodiscard]] bool empty() const { return tokens_.empty(); }

  friend bool operator==(const TokenSequence& a, const TokenSequence& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::string joined_;
};

/// Applies the mteval-v14 international tokenization rules and returns the
/// space-normalized string.
std::string intl_tokenize(std::string_view text);

/// `language` only matters for "zh": a whitespace split that yields a single
/// token longer than 4 characters falls back to one token per character.
TokenSequence tokenize(std::string_view text, TokenScheme scheme, std::string_view language = {});

/// Per-token lemma lookup. Implementations must be safe for concurrent use.
class Lemmatizer {
 public:
  virtual ~Lemmatizer() = default;
  [[nodiscard]] virtual bool supports(std::string_view language) const = 0;
  /// Lemma of an already lowercased token.
  [[nodiscard]] virtual std::string lemma(std::string_view lowered_token) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Lowercase-only lemmatizer; supports every language.
class IdentityLemmatizer final : public Lemmatizer {
 public:
  [[nodiscard]] bool supports(std::string_view) const override { return true; }
  [[nodiscard]] std::string lemma(std::string_view lowered_token) const override {
    return std::string(lowered_token);
  }
  [[nodiscard]] std::string name() const override { return "identity"; }
};

/// Dictionary lemmatizer backed by `surface<TAB>lemma` lines. Chains
/// (a->b, b->c) are resolved at construction so lookups are idempotent.
class RuleTableLemmatizer final : public Lemmatizer {
 public:
  RuleTableLemmatizer(std::unordered_map<std::string, std::string> table,
                      std::set<std::string> languages);

  /// Loads a TSV lemma file. Blank lines and lines starting with '#' are skipped.
  static RuleTableLemmatizer from_file(const std::filesystem::path& path,
                                       std::set<std::string> languages);

  [[nodiscard]] bool supports(std::string_view language) const override;
  [[nodiscard]] std::string lemma(std::string_view lowered_token) const override;
  [[nodiscard]] std::string name() const override { return "rule-table"; }
  [[nodiscard]] std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
  std::set<std::string> languages_;
};

/// Lowercases and lemmatizes every token; the token count is preserved.
/// Throws ValidationError if the lemmatizer does not support `language`.
TokenSequence lemmatize(const TokenSequence& seq, const Lemmatizer& lemmatizer,
                        std::string_view language = {});

}  // namespace proverbkit
