#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/modelclient.hpp"

namespace proverbkit {

struct HypothesisRecord {
  std::string system_id;
  std::string reference_id;
  std::string reference;
  std::string hypothesis;
  std::map<std::string, double> metric_scores;  // "BLEU", "CHRFPP", "COMET"
  std::optional<std::vector<double>> embedding;

  friend bool operator==(const HypothesisRecord&, const HypothesisRecord&) = default;
};

void to_json(nlohmann::json& j, const HypothesisRecord& r);
void from_json(const nlohmann::json& j, HypothesisRecord& r);

struct SensitivityConfig {
  double cos_diff_max = 0.05;
  std::map<std::string, double> metric_diff_min{{"COMET", 10.0}, {"BLEU", 5.0}, {"CHRFPP", 10.0}};

  void validate() const;
};

void to_json(nlohmann::json& j, const SensitivityConfig& c);
void from_json(const nlohmann::json& j, SensitivityConfig& c);

/// u.v / (|u||v|). Throws ValidationError on a dimension mismatch or a zero vector.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

/// Reference embeddings keyed by reference_id.
using ReferenceEmbeddings = std::map<std::string, std::vector<double>>;

struct UnstablePair {
  const HypothesisRecord* first = nullptr;   // lower (system_id, hypothesis)
  const HypothesisRecord* second = nullptr;
  std::string metric;
  double cos_first = 0.0;
  double cos_second = 0.0;
};

/// Pairs within a reference group whose similarities to the reference differ by
/// less than cos_diff_max while a configured metric differs by more than its
/// threshold. One entry per (pair, metric), ordered by (reference_id, system
/// ids, metric). Metrics absent from either record are skipped.
std::vector<UnstablePair> find_unstable_pairs(const std::vector<HypothesisRecord>& records,
                                              const ReferenceEmbeddings& references,
                                              const SensitivityConfig& config = {});

/// Appearances per system, counting each flagged pair once however many metrics flagged it.
std::map<std::string, std::size_t> count_by_system(const std::vector<UnstablePair>& pairs);

/// Appearances per system, counting every (pair, metric) entry.
std::map<std::string, std::size_t> count_by_system_per_metric(const std::vector<UnstablePair>& pairs);

struct SensitivitySummary {
  std::size_t flagged_entries = 0;  // (pair, metric) entries
  std::size_t unique_pairs = 0;
  std::map<std::string, std::size_t> per_metric;
  std::map<std::string, std::size_t> by_system_unique;
  std::map<std::string, std::size_t> by_system_per_metric;
};

SensitivitySummary summarize(const std::vector<UnstablePair>& pairs);

void to_json(nlohmann::json& j, const SensitivitySummary& s);
void from_json(const nlohmann::json& j, SensitivitySummary& s);

/// Output row: reference, both hypotheses, both scores per metric, both cosines.
nlohmann::json pair_row(const UnstablePair& pair);

/// Fills missing hypothesis embeddings and embeds every distinct reference.
ReferenceEmbeddings embed_records(std::vector<HypothesisRecord>& records, ModelClient& embedder);

}  // namespace proverbkit
