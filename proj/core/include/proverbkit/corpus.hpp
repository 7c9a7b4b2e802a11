#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proverbkit {

/// One proverb with its language, explanation, and figurative label.
struct ProverbEntry {
  std::string id;
  std::string text;
  std::string language;  // ISO-639-1
  std::string explanation;
  bool figurative = false;
  std::vector<std::string> equivalents;

  friend bool operator==(const ProverbEntry&, const ProverbEntry&) = default;
};

/// One aligned subtitle line. (doc_id, line_idx) is the ordering key.
struct SentencePair {
  std::string doc_id;
  std::size_t line_idx = 0;
  std::string source;
  std::string target;
  std::string src_lang;
  std::string tgt_lang;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

/// Translation direction, e.g. {"en", "de"}.
struct Direction {
  std::string src;
  std::string tgt;

  [[nodiscard]] std::string label() const { return src + "-" + tgt; }
  friend auto operator<=>(const Direction&, const Direction&) = default;
};

enum class Phase { kP1, kP2, kP3 };

std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view text);

struct MinedCandidate {
  SentencePair pair;
  std::string proverb_id;
  double match_score = 0.0;
  Phase phase = Phase::kP1;

  [[nodiscard]] Direction direction() const { return {pair.src_lang, pair.tgt_lang}; }
  /// Advances the phase; moving backwards is a ValidationError.
  void advance(Phase next);

  friend bool operator==(const MinedCandidate&, const MinedCandidate&) = default;
};

struct ScoredCandidate {
  MinedCandidate candidate;
  double llm_qe = 0.0;  // mean of both orderings, [1,5]
  double da_qe = 0.0;   // [0,1]
  double overall = 0.0;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

/// Neighbouring lines of a focal pair within one document.
struct ContextWindow {
  std::vector<SentencePair> prior;      // ascending line_idx, all < focal
  std::vector<SentencePair> following;  // ascending line_idx, all > focal

  [[nodiscard]] bool empty() const { return prior.empty() && following.empty(); }
  friend bool operator==(const ContextWindow&, const ContextWindow&) = default;
};

/// Immutable bitext grouped by document and ordered by line index.
class Corpus {
 public:
  using Document = std::vector<SentencePair>;

  Corpus() = default;
  /// Groups and sorts the pairs. Throws DataError on a duplicate key.
  explicit Corpus(std::vector<SentencePair> pairs);

  [[nodiscard]] const std::map<std::string, Document>& documents() const { return docs_; }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool empty() const { return size_ == 0; }

  /// Returns nullptr when (doc_id, line_idx) is absent.
  [[nodiscard]] const SentencePair* find(std::string_view doc_id, std::size_t line_idx) const;

  /// All pairs in (doc_id, line_idx) order.
  [[nodiscard]] std::vector<SentencePair> pairs() const;

  /// Distinct source languages present.
  [[nodiscard]] std::set<std::string> source_languages() const;

 private:
  std::map<std::string, Document> docs_;
  std::size_t size_ = 0;
};

inline const std::set<std::string>& default_languages() {
  static const std::set<std::string> langs{"en", "de", "bn", "id", "zh"};
  return langs;
}

/// Reads a proverb file (one JSON object per line). Blank lines are skipped.
/// Throws DataError naming the offending line on malformed records, invalid
/// languages, or duplicate ids.
std::vector<ProverbEntry> load_proverbs(
    const std::filesystem::path& path,
    const std::set<std::string>& languages = default_languages());

/// Reads a bitext file (one JSON object per line). Extra keys such as
/// timestamps are accepted and ignored.
Corpus load_bitext(const std::filesystem::path& path);

/// Writes the corpus in (doc_id, line_idx) order.
void save_bitext(const Corpus& corpus, const std::filesystem::path& path);

void save_proverbs(const std::vector<ProverbEntry>& proverbs, const std::filesystem::path& path);

/// Up to `max_each` neighbours before and after `focal` in its document.
/// Throws DataError if the focal pair is not in the corpus.
ContextWindow retrieve_context(const Corpus& corpus, const SentencePair& focal,
                               std::size_t max_each = 5);

}  // namespace proverbkit
