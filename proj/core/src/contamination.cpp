#include "proverbkit/contamination.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/corpus.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/metrics.hpp"
#include "proverbkit/textnorm.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

std::string_view to_string(LcsUnit unit) {
  return unit == LcsUnit::kToken ? "token" : "character";
}

LcsUnit lcs_unit_from_string(std::string_view text) {
  if (text == "token") return LcsUnit::kToken;
  if (text == "character" || text == "char") return LcsUnit::kCharacter;
  throw ValidationError("unknown LCS unit '" + std::string(text) + "'");
}

void to_json(nlohmann::json& j, const ProbeSample& s) {
  j = {{"id", s.id},
       {"language", s.language},
       {"context", s.context},
       {"sentence", s.sentence},
       {"tau", s.tau},
       {"prefix", s.prefix},
       {"suffix", s.suffix},
       {"completion_with_ctx", s.completion_with_ctx},
       {"completion_no_ctx", s.completion_no_ctx},
       {"gamma", s.gamma}};
}

void from_json(const nlohmann::json& j, ProbeSample& s) {
  try {
    s.id = j.at("id").get<std::string>();
    s.language = j.at("language").get<std::string>();
    s.context = j.value("context", "");
    s.sentence = j.at("sentence").get<std::string>();
    s.tau = j.value("tau", 0.5);
    s.prefix = j.value("prefix", "");
    s.suffix = j.value("suffix", "");
    s.completion_with_ctx = j.value("completion_with_ctx", "");
    s.completion_no_ctx = j.value("completion_no_ctx", "");
    s.gamma = j.value("gamma", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad probe sample: ") + e.what());
  }
}

std::pair<std::string, std::string> split_prefix(std::string_view sentence, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  const auto tokens = tokenize(sentence, TokenScheme::kWhitespace).tokens();
  const std::size_t n = tokens.size();
  if (n < 2) throw ValidationError("sentence needs at least 2 tokens to split");
  // The epsilon keeps products such as 0.7 * 10 from flooring to 6.
  auto k = static_cast<std::size_t>(std::floor(tau * static_cast<double>(n) + 1e-9));
  k = std::clamp<std::size_t>(k, 1, n - 1);
  std::string prefix;
  std::string suffix;
  for (std::size_t i = 0; i < n; ++i) {
    std::string& side = i < k ? prefix : suffix;
    if (!side.empty()) side += ' ';
    side += tokens[i];
  }
  return {prefix, suffix};
}

ProbeInputs build_probe_inputs(const ProbeSample& sample) {
  ProbeInputs in;
  in.without_context = sample.prefix;
  in.with_context = utf8::trim(sample.context).empty() ? sample.prefix
                                                       : sample.context + "\n" + sample.prefix;
  return in;
}

std::vector<std::string> lcs_units(std::string_view text, LcsUnit unit) {
  if (unit == LcsUnit::kToken) return tokenize(text, TokenScheme::kWhitespace).tokens();
  std::vector<std::string> out;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_space(cp)) continue;
    std::string s;
    utf8::append(s, cp);
    out.push_back(std::move(s));
  }
  return out;
}

double gamma(const ProbeSample& sample, LcsUnit unit) {
  const auto suffix = lcs_units(sample.suffix, unit);
  if (suffix.empty()) throw ValidationError("gamma: empty suffix");
  const auto with_ctx = lcs_units(sample.completion_with_ctx, unit);
  const auto no_ctx = lcs_units(sample.completion_no_ctx, unit);
  const double gain = static_cast<double>(lcs_len(with_ctx, suffix)) -
                      static_cast<double>(lcs_len(no_ctx, suffix));
  return std::max(0.0, gain / static_cast<double>(suffix.size()));
}

std::vector<LanguageContamination> contamination_report(const std::vector<ProbeSample>& samples,
                                                        double cutoff) {
  std::map<std::string, LanguageContamination> groups;
  for (const auto& s : samples) {
    if (s.language.empty()) throw DataError("probe sample '" + s.id + "' has no language tag");
    auto& g = groups[s.language];
    g.language = s.language;
    g.samples++;
    if (s.gamma > cutoff) g.above++;
  }
  for (const auto& lang : default_languages()) {
    if (!groups.count(lang)) spdlog::warn("contamination report: no samples for '{}'; omitted", lang);
  }
  std::vector<LanguageContamination> out;
  for (auto& [_, g] : groups) {
    g.percent = round_half_even(100.0 * static_cast<double>(g.above) / static_cast<double>(g.samples), 1);
    out.push_back(g);
  }
  return out;
}

void to_json(nlohmann::json& j, const LanguageContamination& r) {
  j = {{"language", r.language}, {"samples", r.samples}, {"above", r.above}, {"percent", r.percent}};
}

void from_json(const nlohmann::json& j, LanguageContamination& r) {
  try {
    r.language = j.at("language").get<std::string>();
    r.samples = j.at("samples").get<std::size_t>();
    r.above = j.at("above").get<std::size_t>();
    r.percent = j.at("percent").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad contamination row: ") + e.what());
  }
}

void ProbeConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw ValidationError("cutoff must lie in [0, 1]");
}

std::vector<ProbeSample> run_probes(std::vector<ProbeSample> samples, ModelClient& completer,
                                    const ProbeConfig& config) {
  config.validate();
  for (auto& s : samples) {
    s.tau = config.tau;
    std::tie(s.prefix, s.suffix) = split_prefix(s.sentence, config.tau);
  }
  parallel_for(samples.size(), completer.config().max_in_flight, [&](std::size_t i) {
    auto& s = samples[i];
    const auto inputs = build_probe_inputs(s);
    const std::size_t budget = 2 * tokenize(s.suffix, TokenScheme::kWhitespace).size();
    s.completion_with_ctx = completer.complete(inputs.with_context, budget);
    s.completion_no_ctx = completer.complete(inputs.without_context, budget);
    s.gamma = gamma(s, config.unit);
  });
  return samples;
}

}  // namespace proverbkit
