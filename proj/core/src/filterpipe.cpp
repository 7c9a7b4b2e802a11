#include "proverbkit/filterpipe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <tuple>

#include <spdlog/spdlog.h>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/prompts.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

void FilterConfig::validate() const {
  if (max_per_direction == 0) throw ValidationError("max_per_direction must be positive");
  if (!(min_score >= 1.0 && min_score <= 10.0)) {
    throw ValidationError("min_score must lie in [1, 10]");
  }
  if (!(qe_weight > 0.0) || !std::isfinite(qe_weight)) {
    throw ValidationError("qe_weight must be positive");
  }
}

void to_json(nlohmann::json& j, const FilterConfig& c) {
  j = {{"max_per_direction", c.max_per_direction},
       {"min_score", c.min_score},
       {"qe_weight", c.qe_weight}};
}

void from_json(const nlohmann::json& j, FilterConfig& c) {
  try {
    c.max_per_direction = j.value("max_per_direction", c.max_per_direction);
    c.min_score = j.value("min_score", c.min_score);
    c.qe_weight = j.value("qe_weight", c.qe_weight);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad filter config: ") + e.what());
  }
}

const FilterPrompts& FilterPrompts::defaults() {
  static const FilterPrompts p{
      "You are a careful linguist. Answer with exactly one word: Yes or No.",
      "Proverb: {proverb}\nSentence: {sentence}\n"
      "Is the proverb contained in the sentence? Answer Yes or No.",
      "You are a professional translation evaluator. Reply with a single integer.",
      "Score the translation from 1 to 5, where 5 is a perfect translation.\n"
      "Source text: {source}\nTranslation: {target}"};
  return p;
}

FilterPrompts FilterPrompts::from_file(const std::filesystem::path& path) {
  FilterPrompts p = defaults();
  const auto doc = records::read_document(path);
  try {
    p.usage_system = doc.value("usage_system", p.usage_system);
    p.usage_user = doc.value("usage_user", p.usage_user);
    p.qe_system = doc.value("qe_system", p.qe_system);
    p.qe_user = doc.value("qe_user", p.qe_user);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return p;
}

std::string_view to_string(UsageVerdict v) {
  switch (v) {
    case UsageVerdict::kUsed: return "used";
    case UsageVerdict::kNotUsed: return "not_used";
    case UsageVerdict::kUndecided: return "undecided";
  }
  return "undecided";
}

UsageVerdict usage_filter(const MinedCandidate& candidate, const ProverbEntry& proverb,
                          ModelClient& llm, const FilterPrompts& prompts) {
  const Transcript transcript{
      {Role::kSystem, prompts.usage_system},
      {Role::kUser, fill_placeholders(prompts.usage_user, {{"proverb", proverb.text},
                                                           {"sentence", candidate.pair.source}})}};
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    last = utf8::trim(llm.chat(transcript, {attempt, "usage"}));
    if (last == "Yes") return UsageVerdict::kUsed;
    if (last == "No") return UsageVerdict::kNotUsed;
  }
  spdlog::warn("protocol error: usage check for {} / {} answered '{}' twice; excluded",
               records::pair_key(candidate.pair), candidate.proverb_id, last);
  return UsageVerdict::kUndecided;
}

double parse_qe_reply(std::string_view reply) {
  const std::string text = utf8::trim(reply);
  double value = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw ProtocolError("QE reply is not a number: '" + text + "'");
  }
  if (!(value >= 1.0 && value <= 5.0)) {
    throw ProtocolError("QE reply outside [1,5]: '" + text + "'");
  }
  return value;
}

double llm_qe_score(const MinedCandidate& candidate, ModelClient& llm, const FilterPrompts& prompts) {
  auto ask = [&](const std::string& a, const std::string& b) {
    const Transcript t{
        {Role::kSystem, prompts.qe_system},
        {Role::kUser, fill_placeholders(prompts.qe_user, {{"source", a}, {"target", b}})}};
    return parse_qe_reply(llm.chat(t, {0, "qe"}));
  };
  const double forward = ask(candidate.pair.source, candidate.pair.target);
  const double backward = ask(candidate.pair.target, candidate.pair.source);
  return (forward + backward) / 2.0;
}

double fuse_scores(double llm_qe, double da_qe, double qe_weight) {
  if (!(llm_qe >= 1.0 && llm_qe <= 5.0)) throw ValidationError("llm_qe outside [1,5]");
  if (!(da_qe >= 0.0 && da_qe <= 1.0)) throw ValidationError("da_qe outside [0,1]");
  if (!(qe_weight > 0.0) || !std::isfinite(qe_weight)) throw ValidationError("qe_weight must be positive");
  return llm_qe + da_qe * qe_weight;
}

QuantileResult quantile_threshold(const std::vector<double>& scores, const FilterConfig& config) {
  config.validate();
  if (scores.empty()) throw ValidationError("quantile_threshold: no scores");
  const std::size_t n = scores.size();
  const std::size_t cap = config.max_per_direction;
  QuantileResult r;
  r.q_min = std::max(0.0, 1.0 - static_cast<double>(cap) / static_cast<double>(n));
  // ceil(q_min * n) is exactly n - cap when the cap binds; integer form avoids rounding.
  r.rank = n > cap ? n - cap : 1;
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  r.quantile_score = sorted[r.rank - 1];
  r.threshold = std::max(r.quantile_score, config.min_score);
  return r;
}

void sort_scored(std::vector<ScoredCandidate>& v) {
  std::sort(v.begin(), v.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.overall != b.overall) return a.overall > b.overall;
    const auto& pa = a.candidate.pair;
    const auto& pb = b.candidate.pair;
    return std::tie(pa.doc_id, pa.line_idx, a.candidate.proverb_id) <
           std::tie(pb.doc_id, pb.line_idx, b.candidate.proverb_id);
  });
}

std::vector<ScoredCandidate> filter_direction(const std::vector<ScoredCandidate>& candidates,
                                              const FilterConfig& config) {
  config.validate();
  if (candidates.empty()) return {};
  const Direction dir = candidates.front().candidate.direction();
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.candidate.direction() != dir) {
      throw ValidationError("filter_direction: mixed directions " + dir.label() + " and " +
                            c.candidate.direction().label());
    }
    scores.push_back(c.overall);
  }
  const double threshold = quantile_threshold(scores, config).threshold;
  std::vector<ScoredCandidate> out;
  for (const auto& c : candidates) {
    if (c.overall >= threshold) out.push_back(c);
  }
  sort_scored(out);
  return out;
}

void to_json(nlohmann::json& j, const DirectionReport& r) {
  j = {{"direction", r.direction.label()},
       {"p1", r.p1},
       {"used", r.used},
       {"not_used", r.not_used},
       {"undecided", r.undecided},
       {"p2", r.p2}};
  if (r.quantile) {
    j["q_min"] = r.quantile->q_min;
    j["rank"] = r.quantile->rank;
    j["quantile_score"] = r.quantile->quantile_score;
    j["threshold"] = r.quantile->threshold;
  } else {
    j["q_min"] = nullptr;
    j["rank"] = nullptr;
    j["quantile_score"] = nullptr;
    j["threshold"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, DirectionReport& r) {
  try {
    const std::string label = j.at("direction").get<std::string>();
    const auto dash = label.find('-');
    if (dash == std::string::npos) throw DataError("bad direction label '" + label + "'");
    r.direction = {label.substr(0, dash), label.substr(dash + 1)};
    r.p1 = j.at("p1").get<std::size_t>();
    r.used = j.value("used", std::size_t{0});
    r.not_used = j.value("not_used", std::size_t{0});
    r.undecided = j.value("undecided", std::size_t{0});
    r.p2 = j.at("p2").get<std::size_t>();
    if (j.contains("threshold") && !j["threshold"].is_null()) {
      QuantileResult q;
      q.q_min = j.at("q_min").get<double>();
      q.rank = j.at("rank").get<std::size_t>();
      q.quantile_score = j.at("quantile_score").get<double>();
      q.threshold = j.at("threshold").get<double>();
      r.quantile = q;
    } else {
      r.quantile.reset();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad filter report row: ") + e.what());
  }
}

FilterOutcome run_filter(const std::vector<MinedCandidate>& candidates,
                         const std::vector<ProverbEntry>& proverbs, ModelClient& llm,
                         ModelClient& da_qe, const FilterConfig& config,
                         const FilterPrompts& prompts) {
  config.validate();
  std::map<std::string, const ProverbEntry*> by_id;
  for (const auto& p : proverbs) by_id.emplace(p.id, &p);
  for (const auto& c : candidates) {
    if (!by_id.count(c.proverb_id)) {
      throw DataError("candidate " + records::pair_key(c.pair) + " cites unknown proverb '" +
                      c.proverb_id + "'");
    }
  }

  struct Slot {
    UsageVerdict usage = UsageVerdict::kUndecided;
    double llm_qe = 0.0;
    double da = 0.0;
  };
  std::vector<Slot> slots(candidates.size());
  parallel_for(candidates.size(), llm.config().max_in_flight, [&](std::size_t i) {
    const auto& c = candidates[i];
    slots[i].usage = usage_filter(c, *by_id.at(c.proverb_id), llm, prompts);
    if (slots[i].usage != UsageVerdict::kUsed) return;
    slots[i].llm_qe = llm_qe_score(c, llm, prompts);
    slots[i].da = da_qe.da_qe(c.pair.source, c.pair.target);
  });

  // Barrier passed: everything below is single-threaded and ordered.
  std::map<Direction, DirectionReport> reports;
  std::map<Direction, std::vector<ScoredCandidate>> scored;
  FilterOutcome out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    auto& rep = reports[c.direction()];
    rep.direction = c.direction();
    rep.p1++;
    switch (slots[i].usage) {
      case UsageVerdict::kNotUsed: rep.not_used++; continue;
      case UsageVerdict::kUndecided:
        rep.undecided++;
        out.undecided.push_back(records::pair_key(c.pair) + ":" + c.proverb_id);
        continue;
      case UsageVerdict::kUsed: rep.used++; break;
    }
    ScoredCandidate s{c, slots[i].llm_qe, slots[i].da,
                      fuse_scores(slots[i].llm_qe, slots[i].da, config.qe_weight)};
    scored[c.direction()].push_back(std::move(s));
  }
  for (auto& [dir, rep] : reports) {
    auto it = scored.find(dir);
    if (it == scored.end() || it->second.empty()) {
      out.reports.push_back(rep);
      continue;
    }
    std::vector<double> scores;
    for (const auto& s : it->second) scores.push_back(s.overall);
    rep.quantile = quantile_threshold(scores, config);
    auto kept = filter_direction(it->second, config);
    for (auto& k : kept) k.candidate.advance(Phase::kP2);
    rep.p2 = kept.size();
    out.kept.insert(out.kept.end(), kept.begin(), kept.end());
    out.reports.push_back(rep);
  }
  return out;
}

}  // namespace proverbkit
