#include "proverbkit/miner.hpp"

#include <algorithm>
#include <iterator>
#include <thread>
#include <tuple>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/metrics.hpp"

namespace proverbkit {

void MiningConfig::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ValidationError("mining threshold must lie in (0, 1]");
  }
  if (!lemmatizer) throw ValidationError("mining requires a lemmatizer");
}

double containment_score(const TokenSequence& proverb, const TokenSequence& sentence) {
  if (proverb.empty()) throw ValidationError("containment_score: empty proverb");
  const std::size_t p = proverb.size();
  const std::size_t min_len = (p + 1) / 2;
  const std::size_t max_len = std::min(2 * p, sentence.size());
  const auto& toks = sentence.tokens();
  double best = 0.0;
  for (std::size_t len = min_len; len <= max_len; ++len) {
    for (std::size_t start = 0; start + len <= toks.size(); ++start) {
      std::string window;
      for (std::size_t k = start; k < start + len; ++k) {
        if (k > start) window += ' ';
        window += toks[k];
      }
      best = std::max(best, similarity_ratio(proverb.joined(), window));
      if (best == 1.0) return best;
    }
  }
  return best;
}

TokenSequence normalize_for_matching(std::string_view text, std::string_view language,
                                     const MiningConfig& config) {
  return lemmatize(tokenize(text, config.scheme, language), *config.lemmatizer, language);
}

std::vector<MinedCandidate> mine(const Corpus& corpus, const std::vector<ProverbEntry>& proverbs,
                                 const MiningConfig& config) {
  config.validate();
  const auto langs = corpus.source_languages();
  if (langs.size() > 1) {
    throw ValidationError("corpus mixes several source languages");
  }
  struct Prepared {
    const ProverbEntry* entry;
    TokenSequence norm;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(proverbs.size());
  for (const auto& p : proverbs) {
    if (!langs.empty() && p.language != *langs.begin()) {
      throw ValidationError("proverb '" + p.id + "' is in '" + p.language +
                            "' but the corpus source language is '" + *langs.begin() + "'");
    }
    auto norm = normalize_for_matching(p.text, p.language, config);
    if (norm.empty()) throw ValidationError("proverb '" + p.id + "' has no tokens");
    prepared.push_back({&p, std::move(norm)});
  }
  // Documents are independent; workers pull whole documents.
  std::vector<const Corpus::Document*> docs;
  for (const auto& [_, doc] : corpus.documents()) docs.push_back(&doc);

  std::vector<std::vector<MinedCandidate>> per_doc(docs.size());
  const unsigned n_threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  parallel_for(docs.size(), n_threads, [&](std::size_t d) {
    for (const auto& pair : *docs[d]) {
      const auto sentence = normalize_for_matching(pair.source, pair.src_lang, config);
      for (const auto& prov : prepared) {
        const double score = containment_score(prov.norm, sentence);
        if (score >= config.threshold) {
          per_doc[d].push_back({pair, prov.entry->id, score, Phase::kP1});
        }
      }
    }
  });

  std::vector<MinedCandidate> out;
  for (auto& v : per_doc) std::move(v.begin(), v.end(), std::back_inserter(out));
  std::sort(out.begin(), out.end(), [](const MinedCandidate& a, const MinedCandidate& b) {
    return std::tie(a.pair.doc_id, a.pair.line_idx, a.proverb_id) <
           std::tie(b.pair.doc_id, b.pair.line_idx, b.proverb_id);
  });
  return out;
}

}  // namespace proverbkit
