#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "proverbkit/modelclient.hpp"

namespace proverbkit {

struct JudgeItem {
  std::string id;
  std::string source;
  std::string reference;
  std::string context_before;
  std::string context_after;
  std::string hyp_model_x;
  std::string hyp_model_y;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const JudgeItem& item);
void from_json(const nlohmann::json& j, JudgeItem& item);

enum class RawVerdict { kA, kB, kTie, kInvalid };
enum class Outcome { kX, kY, kTie, kInvalid };

std::string_view to_string(RawVerdict v);
std::string_view to_string(Outcome v);

struct PositionMap {
  bool x_is_a = true;
  friend bool operator==(const PositionMap&, const PositionMap&) = default;
};

struct Verdict {
  std::string item_id;
  RawVerdict raw = RawVerdict::kInvalid;
  Outcome resolved = Outcome::kInvalid;
  PositionMap positions;
  int attempts = 0;
};

void to_json(nlohmann::json& j, const Verdict& v);
void from_json(const nlohmann::json& j, Verdict& v);

std::uint64_t splitmix64(std::uint64_t x);
/// Per-item seed derived from the run's global seed and the item's position.
std::uint64_t derive_item_seed(std::uint64_t global_seed, std::size_t index);

PositionMap assign_positions(const JudgeItem& item);

/// Maps A/B back to X/Y under the position map.
Outcome resolve(RawVerdict raw, PositionMap positions);

/// Accepts "A", "B" or "tie" (case-insensitive, optional trailing period).
RawVerdict parse_verdict(std::string_view reply);

/// Editable wording. Placeholders: {context_before}, {source}, {context_after},
/// {reference}, {translation_a}, {translation_b}.
struct JudgePrompt {
  std::string system;
  std::string user;

  static const JudgePrompt& defaults();
  static JudgePrompt from_file(const std::filesystem::path& path);
};

/// Unparsable replies are re-asked once, then recorded as invalid.
Verdict judge_pair(const JudgeItem& item, ModelClient& client,
                   const JudgePrompt& prompt = JudgePrompt::defaults());

std::vector<Verdict> judge_all(const std::vector<JudgeItem>& items, ModelClient& client,
                               const JudgePrompt& prompt = JudgePrompt::defaults());

struct WinRates {
  double win_x = 0.0;
  double win_y = 0.0;
  double tie = 0.0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  // Ties removed from the denominator; absent when every valid verdict is a tie.
  std::optional<double> win_x_no_tie;
  std::optional<double> win_y_no_tie;
};

void to_json(nlohmann::json& j, const WinRates& w);
void from_json(const nlohmann::json& j, WinRates& w);

/// Fractions over valid verdicts. Throws ValidationError if none are valid.
WinRates tally_winrates(const std::vector<Verdict>& verdicts);

}  // namespace proverbkit
