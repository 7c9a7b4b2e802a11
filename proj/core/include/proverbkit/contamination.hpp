#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/modelclient.hpp"

namespace proverbkit {

enum class LcsUnit { kToken, kCharacter };

std::string_view to_string(LcsUnit unit);
LcsUnit lcs_unit_from_string(std::string_view text);

/// One prefix-completion probe.
struct ProbeSample {
  std::string id;
  std::string language;
  std::string context;   // preceding sentences
  std::string sentence;
  double tau = 0.5;
  std::string prefix;
  std::string suffix;
  std::string completion_with_ctx;
  std::string completion_no_ctx;
  double gamma = 0.0;

  friend bool operator==(const ProbeSample&, const ProbeSample&) = default;
};

void to_json(nlohmann::json& j, const ProbeSample& s);
/// Only id, language, context and sentence are required.
void from_json(const nlohmann::json& j, ProbeSample& s);

/// Whitespace-token split: the prefix holds max(1, floor(tau * n)) tokens.
/// Throws ValidationError for fewer than 2 tokens or tau outside (0,1).
std::pair<std::string, std::string> split_prefix(std::string_view sentence, double tau);

struct ProbeInputs {
  std::string with_context;     // context + "\n" + prefix
  std::string without_context;  // prefix
};

ProbeInputs build_probe_inputs(const ProbeSample& sample);

/// Sequence used for LCS: whitespace tokens, or code points excluding whitespace.
std::vector<std::string> lcs_units(std::string_view text, LcsUnit unit);

/// max(0, (lcs(with_ctx, suffix) - lcs(no_ctx, suffix)) / |suffix|).
double gamma(const ProbeSample& sample, LcsUnit unit = LcsUnit::kToken);

struct LanguageContamination {
  std::string language;
  std::size_t samples = 0;
  std::size_t above = 0;
  double percent = 0.0;  // one decimal place
};

/// Percentage of samples per language with gamma strictly above `cutoff`.
std::vector<LanguageContamination> contamination_report(const std::vector<ProbeSample>& samples,
                                                        double cutoff = 0.9);

void to_json(nlohmann::json& j, const LanguageContamination& r);
void from_json(const nlohmann::json& j, LanguageContamination& r);

struct ProbeConfig {
  double tau = 0.5;
  double cutoff = 0.9;
  LcsUnit unit = LcsUnit::kToken;

  void validate() const;
};

/// Splits every sample, requests both completions (max 2 * |suffix| tokens),
/// and fills in gamma. Calls fan out under the client's in-flight bound.
std::vector<ProbeSample> run_probes(std::vector<ProbeSample> samples, ModelClient& completer,
                                    const ProbeConfig& config);

}  // namespace proverbkit
