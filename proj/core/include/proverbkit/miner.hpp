#pragma once

#include <memory>
#include <vector>

#include "proverbkit/corpus.hpp"
#include "proverbkit/textnorm.hpp"

namespace proverbkit {

struct MiningConfig {
  double threshold = 0.8;
  TokenScheme scheme = TokenScheme::kWhitespace;
  std::shared_ptr<const Lemmatizer> lemmatizer = std::make_shared<IdentityLemmatizer>();
  /// Worker threads over documents; 0 picks the hardware concurrency.
  unsigned threads = 0;

  /// Throws ValidationError unless 0 < threshold <= 1 and a lemmatizer is set.
  void validate() const;
};

/// Best character-level ratio between the proverb and any contiguous window
/// of the sentence whose token length lies in [ceil(|p|/2), 2|p|]. Returns
/// 0.0 when no window fits. Throws ValidationError on an empty proverb.
double containment_score(const TokenSequence& proverb, const TokenSequence& sentence);

/// Tokenized and lemmatized form used for matching.
TokenSequence normalize_for_matching(std::string_view text, std::string_view language,
                                     const MiningConfig& config);

/// Emits one P1 candidate per (pair, proverb) whose containment score reaches
/// the threshold, ordered by (doc_id, line_idx, proverb_id). Throws
/// ValidationError if any proverb language differs from the corpus source
/// language.
std::vector<MinedCandidate> mine(const Corpus& corpus, const std::vector<ProverbEntry>& proverbs,
                                 const MiningConfig& config);

}  // namespace proverbkit
