#include "proverbkit/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>
#include <tuple>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/error.hpp"

namespace proverbkit {

void to_json(nlohmann::json& j, const HypothesisRecord& r) {
  j = {{"system_id", r.system_id},
       {"reference_id", r.reference_id},
       {"reference", r.reference},
       {"hypothesis", r.hypothesis},
       {"metric_scores", r.metric_scores}};
  if (r.embedding) j["embedding"] = *r.embedding;
}

void from_json(const nlohmann::json& j, HypothesisRecord& r) {
  try {
    r.system_id = j.at("system_id").get<std::string>();
    r.reference_id = j.at("reference_id").get<std::string>();
    r.reference = j.value("reference", "");
    r.hypothesis = j.at("hypothesis").get<std::string>();
    r.metric_scores = j.value("metric_scores", std::map<std::string, double>{});
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      r.embedding = j["embedding"].get<std::vector<double>>();
    } else {
      r.embedding.reset();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad hypothesis record: ") + e.what());
  }
}

void SensitivityConfig::validate() const {
  if (!(cos_diff_max > 0.0)) throw ValidationError("cos_diff_max must be positive");
  if (metric_diff_min.empty()) throw ValidationError("no metric thresholds configured");
  for (const auto& [name, value] : metric_diff_min) {
    if (!(value > 0.0)) throw ValidationError("threshold for " + name + " must be positive");
  }
}

void to_json(nlohmann::json& j, const SensitivityConfig& c) {
  j = {{"cos_diff_max", c.cos_diff_max}, {"metric_diff_min", c.metric_diff_min}};
}

void from_json(const nlohmann::json& j, SensitivityConfig& c) {
  try {
    c.cos_diff_max = j.value("cos_diff_max", c.cos_diff_max);
    if (j.contains("metric_diff_min")) {
      c.metric_diff_min = j["metric_diff_min"].get<std::map<std::string, double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad sensitivity config: ") + e.what());
  }
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw ValidationError("cosine: dimensions differ (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValidationError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<UnstablePair> find_unstable_pairs(const std::vector<HypothesisRecord>& records,
                                              const ReferenceEmbeddings& references,
                                              const SensitivityConfig& config) {
  config.validate();
  std::map<std::string, std::vector<const HypothesisRecord*>> groups;
  for (const auto& r : records) {
    if (!r.embedding) {
      throw ValidationError("hypothesis of " + r.system_id + " for " + r.reference_id +
                            " has no embedding");
    }
    groups[r.reference_id].push_back(&r);
  }
  std::vector<std::pair<const std::string*, std::vector<const HypothesisRecord*>*>> work;
  for (auto& [ref_id, members] : groups) {
    if (!references.count(ref_id)) {
      throw ValidationError("no embedding for reference '" + ref_id + "'");
    }
    std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) {
      return std::tie(a->system_id, a->hypothesis) < std::tie(b->system_id, b->hypothesis);
    });
    work.emplace_back(&ref_id, &members);
  }

  std::vector<std::vector<UnstablePair>> per_group(work.size());
  parallel_for(work.size(), std::thread::hardware_concurrency(), [&](std::size_t g) {
    const auto& ref = references.at(*work[g].first);
    const auto& members = *work[g].second;
    std::vector<double> cos(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) cos[i] = cosine(*members[i]->embedding, ref);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (!(std::abs(cos[i] - cos[j]) < config.cos_diff_max)) continue;
        for (const auto& [metric, min_gap] : config.metric_diff_min) {
          auto a = members[i]->metric_scores.find(metric);
          auto b = members[j]->metric_scores.find(metric);
          if (a == members[i]->metric_scores.end() || b == members[j]->metric_scores.end()) continue;
          if (std::abs(a->second - b->second) > min_gap) {
            per_group[g].push_back({members[i], members[j], metric, cos[i], cos[j]});
          }
        }
      }
    }
  });

  std::vector<UnstablePair> out;
  for (auto& v : per_group) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::map<std::string, std::size_t> count_by_system(const std::vector<UnstablePair>& pairs) {
  std::set<std::pair<const HypothesisRecord*, const HypothesisRecord*>> seen;
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    if (!seen.emplace(p.first, p.second).second) continue;
    counts[p.first->system_id]++;
    counts[p.second->system_id]++;
  }
  return counts;
}

std::map<std::string, std::size_t> count_by_system_per_metric(const std::vector<UnstablePair>& pairs) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    counts[p.first->system_id]++;
    counts[p.second->system_id]++;
  }
  return counts;
}

SensitivitySummary summarize(const std::vector<UnstablePair>& pairs) {
  SensitivitySummary s;
  s.flagged_entries = pairs.size();
  std::set<std::pair<const HypothesisRecord*, const HypothesisRecord*>> unique;
  for (const auto& p : pairs) {
    unique.emplace(p.first, p.second);
    s.per_metric[p.metric]++;
  }
  s.unique_pairs = unique.size();
  s.by_system_unique = count_by_system(pairs);
  s.by_system_per_metric = count_by_system_per_metric(pairs);
  return s;
}

void to_json(nlohmann::json& j, const SensitivitySummary& s) {
  j = {{"flagged_entries", s.flagged_entries},
       {"unique_pairs", s.unique_pairs},
       {"per_metric", s.per_metric},
       {"by_system_unique", s.by_system_unique},
       {"by_system_per_metric", s.by_system_per_metric}};
}

void from_json(const nlohmann::json& j, SensitivitySummary& s) {
  try {
    s.flagged_entries = j.at("flagged_entries").get<std::size_t>();
    s.unique_pairs = j.at("unique_pairs").get<std::size_t>();
    s.per_metric = j.at("per_metric").get<std::map<std::string, std::size_t>>();
    s.by_system_unique = j.at("by_system_unique").get<std::map<std::string, std::size_t>>();
    s.by_system_per_metric = j.at("by_system_per_metric").get<std::map<std::string, std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad sensitivity summary: ") + e.what());
  }
}

nlohmann::json pair_row(const UnstablePair& p) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [name, value] : p.first->metric_scores) {
    auto other = p.second->metric_scores.find(name);
    if (other != p.second->metric_scores.end()) scores[name] = {value, other->second};
  }
  return {{"reference_id", p.first->reference_id},
          {"reference", p.first->reference},
          {"metric", p.metric},
          {"system_1", p.first->system_id},
          {"hypothesis_1", p.first->hypothesis},
          {"system_2", p.second->system_id},
          {"hypothesis_2", p.second->hypothesis},
          {"scores", scores},
          {"cosine_1", p.cos_first},
          {"cosine_2", p.cos_second}};
}

ReferenceEmbeddings embed_records(std::vector<HypothesisRecord>& records, ModelClient& embedder) {
  std::map<std::string, std::string> ref_text;
  for (const auto& r : records) {
    auto [it, inserted] = ref_text.emplace(r.reference_id, r.reference);
    if (!inserted && it->second != r.reference) {
      throw DataError("reference '" + r.reference_id + "' appears with different texts");
    }
    if (r.reference.empty()) throw DataError("reference '" + r.reference_id + "' has no text");
  }
  std::vector<std::pair<std::string, std::string>> refs(ref_text.begin(), ref_text.end());
  std::vector<std::vector<double>> ref_vecs(refs.size());
  const std::size_t width = embedder.config().max_in_flight;
  parallel_for(refs.size(), width, [&](std::size_t i) { ref_vecs[i] = embedder.embed(refs[i].second); });
  parallel_for(records.size(), width, [&](std::size_t i) {
    if (!records[i].embedding) records[i].embedding = embedder.embed(records[i].hypothesis);
  });
  ReferenceEmbeddings out;
  for (std::size_t i = 0; i < refs.size(); ++i) out.emplace(refs[i].first, std::move(ref_vecs[i]));
  return out;
}

}  // namespace proverbkit
