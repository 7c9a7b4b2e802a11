#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/corpus.hpp"
#include "proverbkit/modelclient.hpp"

namespace proverbkit {

struct FilterConfig {
  std::size_t max_per_direction = 2000;
  double min_score = 4.0;
  double qe_weight = 5.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const FilterConfig& c);
void from_json(const nlohmann::json& j, FilterConfig& c);

/// Editable wording for the usage check and LLM-QE prompts.
/// Placeholders: {proverb}, {sentence}, {source}, {target}.
struct FilterPrompts {
  std::string usage_system;
  std::string usage_user;
  std::string qe_system;
  std::string qe_user;

  static const FilterPrompts& defaults();
  static FilterPrompts from_file(const std::filesystem::path& path);
};

enum class UsageVerdict { kUsed, kNotUsed, kUndecided };

std::string_view to_string(UsageVerdict v);

/// Asks whether the proverb is used in the candidate's source sentence. A reply
/// other than "Yes"/"No" is re-asked once; a second bad reply yields kUndecided.
UsageVerdict usage_filter(const MinedCandidate& candidate, const ProverbEntry& proverb,
                          ModelClient& llm, const FilterPrompts& prompts = FilterPrompts::defaults());

/// Parses a bare integer or decimal reply. Throws ProtocolError if it is not a
/// number in [1,5].
double parse_qe_reply(std::string_view reply);

/// Mean of the (source, target) and (target, source) ratings.
double llm_qe_score(const MinedCandidate& candidate, ModelClient& llm,
                    const FilterPrompts& prompts = FilterPrompts::defaults());

/// overall = llm_qe + da_qe * qe_weight. Throws ValidationError on out-of-range input.
double fuse_scores(double llm_qe, double da_qe, double qe_weight = 5.0);

struct QuantileResult {
  double q_min = 0.0;
  std::size_t rank = 0;  // 1-based nearest rank in ascending order
  double quantile_score = 0.0;
  double threshold = 0.0;
};

/// q_min = max(0, 1 - cap/n); nearest-rank score at q_min; threshold = max(that, min_score).
QuantileResult quantile_threshold(const std::vector<double>& scores, const FilterConfig& config);

/// Keeps candidates with overall >= threshold, sorted by overall descending,
/// then (doc_id, line_idx, proverb_id). Throws ValidationError on mixed directions.
std::vector<ScoredCandidate> filter_direction(const std::vector<ScoredCandidate>& candidates,
                                              const FilterConfig& config);

/// Orders candidates as filter_direction does.
void sort_scored(std::vector<ScoredCandidate>& candidates);

struct DirectionReport {
  Direction direction;
  std::size_t p1 = 0;
  std::size_t used = 0;
  std::size_t not_used = 0;
  std::size_t undecided = 0;
  std::size_t p2 = 0;
  std::optional<QuantileResult> quantile;  // absent when nothing reached scoring
};

void to_json(nlohmann::json& j, const DirectionReport& r);
void from_json(const nlohmann::json& j, DirectionReport& r);

struct FilterOutcome {
  std::vector<ScoredCandidate> kept;  // grouped by direction, each group sorted
  std::vector<DirectionReport> reports;
  std::vector<std::string> undecided;  // "doc#line:proverb"
};

/// Runs the usage check, both QE scorers, fusion, and per-direction thresholding.
/// Model calls fan out up to the LLM client's in-flight bound; thresholding runs
/// after all calls finish.
FilterOutcome run_filter(const std::vector<MinedCandidate>& candidates,
                         const std::vector<ProverbEntry>& proverbs, ModelClient& llm,
                         ModelClient& da_qe, const FilterConfig& config,
                         const FilterPrompts& prompts = FilterPrompts::defaults());

}  // namespace proverbkit
