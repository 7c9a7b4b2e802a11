#include "proverbkit/judge.hpp"

#include <spdlog/spdlog.h>

#include "proverbkit/concurrency.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/prompts.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

void JudgeItem::validate() const {
  if (utf8::trim(hyp_model_x).empty() || utf8::trim(hyp_model_y).empty()) {
    throw ValidationError("judge item '" + id + "' has an empty hypothesis");
  }
}

void to_json(nlohmann::json& j, const JudgeItem& item) {
  j = {{"id", item.id},
       {"source", item.source},
       {"reference", item.reference},
       {"context_before", item.context_before},
       {"context_after", item.context_after},
       {"hyp_model_x", item.hyp_model_x},
       {"hyp_model_y", item.hyp_model_y},
       {"seed", item.seed}};
}

void from_json(const nlohmann::json& j, JudgeItem& item) {
  try {
    item.id = j.at("id").get<std::string>();
    item.source = j.at("source").get<std::string>();
    item.reference = j.at("reference").get<std::string>();
    item.context_before = j.value("context_before", "");
    item.context_after = j.value("context_after", "");
    item.hyp_model_x = j.at("hyp_model_x").get<std::string>();
    item.hyp_model_y = j.at("hyp_model_y").get<std::string>();
    item.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad judge item: ") + e.what());
  }
}

std::string_view to_string(RawVerdict v) {
  switch (v) {
    case RawVerdict::kA: return "A";
    case RawVerdict::kB: return "B";
    case RawVerdict::kTie: return "tie";
    case RawVerdict::kInvalid: return "invalid";
  }
  return "invalid";
}

std::string_view to_string(Outcome v) {
  switch (v) {
    case Outcome::kX: return "X";
    case Outcome::kY: return "Y";
    case Outcome::kTie: return "tie";
    case Outcome::kInvalid: return "invalid";
  }
  return "invalid";
}

namespace {

RawVerdict raw_from_string(std::string_view s) {
  for (auto v : {RawVerdict::kA, RawVerdict::kB, RawVerdict::kTie, RawVerdict::kInvalid}) {
    if (to_string(v) == s) return v;
  }
  throw DataError("unknown raw verdict '" + std::string(s) + "'");
}

Outcome outcome_from_string(std::string_view s) {
  for (auto v : {Outcome::kX, Outcome::kY, Outcome::kTie, Outcome::kInvalid}) {
    if (to_string(v) == s) return v;
  }
  throw DataError("unknown outcome '" + std::string(s) + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const Verdict& v) {
  j = {{"item_id", v.item_id},
       {"raw", to_string(v.raw)},
       {"resolved", to_string(v.resolved)},
       {"x_is_a", v.positions.x_is_a},
       {"attempts", v.attempts}};
}

void from_json(const nlohmann::json& j, Verdict& v) {
  try {
    v.item_id = j.at("item_id").get<std::string>();
    v.raw = raw_from_string(j.at("raw").get<std::string>());
    v.resolved = outcome_from_string(j.at("resolved").get<std::string>());
    v.positions.x_is_a = j.at("x_is_a").get<bool>();
    v.attempts = j.value("attempts", 1);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad verdict: ") + e.what());
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_item_seed(std::uint64_t global_seed, std::size_t index) {
  return splitmix64(global_seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

PositionMap assign_positions(const JudgeItem& item) {
  return {(splitmix64(item.seed) >> 63) == 0};
}

Outcome resolve(RawVerdict raw, PositionMap positions) {
  switch (raw) {
    case RawVerdict::kA: return positions.x_is_a ? Outcome::kX : Outcome::kY;
    case RawVerdict::kB: return positions.x_is_a ? Outcome::kY : Outcome::kX;
    case RawVerdict::kTie: return Outcome::kTie;
    case RawVerdict::kInvalid: return Outcome::kInvalid;
  }
  return Outcome::kInvalid;
}

RawVerdict parse_verdict(std::string_view reply) {
  std::string s = utf8::to_lower(utf8::trim(reply));
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "a") return RawVerdict::kA;
  if (s == "b") return RawVerdict::kB;
  if (s == "tie") return RawVerdict::kTie;
  return RawVerdict::kInvalid;
}

const JudgePrompt& JudgePrompt::defaults() {
  static const JudgePrompt p{
      "You are an expert judge of translations. Compare two translations of the same "
      "sentence based on translation accuracy, fluency, and cultural appropriateness.",
      "Context before: {context_before}\n"
      "Source: {source}\n"
      "Context after: {context_after}\n"
      "Reference: {reference}\n"
      "Translation A: {translation_a}\n"
      "Translation B: {translation_b}\n"
      "Which translation is better? Answer with exactly one of: A, B, or tie."};
  return p;
}

JudgePrompt JudgePrompt::from_file(const std::filesystem::path& path) {
  JudgePrompt p = defaults();
  const auto doc = records::read_document(path);
  try {
    p.system = doc.value("system", p.system);
    p.user = doc.value("user", p.user);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return p;
}

Verdict judge_pair(const JudgeItem& item, ModelClient& client, const JudgePrompt& prompt) {
  item.validate();
  Verdict v;
  v.item_id = item.id;
  v.positions = assign_positions(item);
  const auto& a = v.positions.x_is_a ? item.hyp_model_x : item.hyp_model_y;
  const auto& b = v.positions.x_is_a ? item.hyp_model_y : item.hyp_model_x;
  const Transcript t{{Role::kSystem, prompt.system},
                     {Role::kUser, fill_placeholders(prompt.user, {{"context_before", item.context_before},
                                                                   {"source", item.source},
                                                                   {"context_after", item.context_after},
                                                                   {"reference", item.reference},
                                                                   {"translation_a", a},
                                                                   {"translation_b", b}})}};
  std::string reply;
  for (int attempt = 0; attempt < 2; ++attempt) {
    v.attempts = attempt + 1;
    reply = client.chat(t, {attempt, "judge"});
    v.raw = parse_verdict(reply);
    if (v.raw != RawVerdict::kInvalid) break;
  }
  if (v.raw == RawVerdict::kInvalid) {
    spdlog::warn("judge reply for '{}' unparsable twice ('{}'); excluded", item.id, utf8::trim(reply));
  }
  v.resolved = resolve(v.raw, v.positions);
  return v;
}

std::vector<Verdict> judge_all(const std::vector<JudgeItem>& items, ModelClient& client,
                               const JudgePrompt& prompt) {
  for (const auto& item : items) item.validate();
  std::vector<Verdict> out(items.size());
  parallel_for(items.size(), client.config().max_in_flight,
               [&](std::size_t i) { out[i] = judge_pair(items[i], client, prompt); });
  return out;
}

void to_json(nlohmann::json& j, const WinRates& w) {
  j = {{"win_x", w.win_x}, {"win_y", w.win_y}, {"tie", w.tie}, {"valid", w.valid}, {"invalid", w.invalid}};
  j["win_x_no_tie"] = w.win_x_no_tie ? nlohmann::json(*w.win_x_no_tie) : nlohmann::json(nullptr);
  j["win_y_no_tie"] = w.win_y_no_tie ? nlohmann::json(*w.win_y_no_tie) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, WinRates& w) {
  try {
    w.win_x = j.at("win_x").get<double>();
    w.win_y = j.at("win_y").get<double>();
    w.tie = j.at("tie").get<double>();
    w.valid = j.at("valid").get<std::size_t>();
    w.invalid = j.value("invalid", std::size_t{0});
    w.win_x_no_tie.reset();
    w.win_y_no_tie.reset();
    if (j.contains("win_x_no_tie") && !j["win_x_no_tie"].is_null()) {
      w.win_x_no_tie = j["win_x_no_tie"].get<double>();
      w.win_y_no_tie = j.at("win_y_no_tie").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad win-rate summary: ") + e.what());
  }
}

WinRates tally_winrates(const std::vector<Verdict>& verdicts) {
  std::size_t x = 0, y = 0, tie = 0, invalid = 0;
  for (const auto& v : verdicts) {
    switch (v.resolved) {
      case Outcome::kX: ++x; break;
      case Outcome::kY: ++y; break;
      case Outcome::kTie: ++tie; break;
      case Outcome::kInvalid: ++invalid; break;
    }
  }
  const std::size_t valid = x + y + tie;
  if (valid == 0) throw ValidationError("no valid verdicts to tally");
  WinRates w;
  w.valid = valid;
  w.invalid = invalid;
  const double n = static_cast<double>(valid);
  w.win_x = static_cast<double>(x) / n;
  w.win_y = static_cast<double>(y) / n;
  w.tie = static_cast<double>(tie) / n;
  if (x + y > 0) {
    w.win_x_no_tie = static_cast<double>(x) / static_cast<double>(x + y);
    w.win_y_no_tie = static_cast<double>(y) / static_cast<double>(x + y);
  }
  return w;
}

}  // namespace proverbkit
