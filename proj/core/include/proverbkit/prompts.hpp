#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proverbkit/chat.hpp"
#include "proverbkit/corpus.hpp"

namespace proverbkit {

enum class TemplateKind { kZeroShot, kOneShot, kExplanation, kDialogueContext, kConcatContext };

std::string_view to_string(TemplateKind kind);
TemplateKind template_from_string(std::string_view text);
const std::vector<TemplateKind>& all_templates();

/// Maximum number of (user, assistant) context rounds in a dialogue prompt.
inline constexpr std::size_t kMaxDialogueRounds = 5;

struct PromptRequest {
  TemplateKind kind = TemplateKind::kZeroShot;
  std::string source;
  std::string src_lang;
  std::string tgt_lang;
  std::optional<std::string> proverb;  // named in the explanation prompt when present
  std::optional<std::string> proverb_explanation;
  std::optional<ContextWindow> context;
};

/// Editable wording. Placeholders: {src}, {tgt}, {proverb}, {explanation}.
struct PromptTemplates {
  std::string system_translate;
  std::string system_explanation;  // appended to system_translate
  std::string system_explanation_named;  // variant used when the proverb text is known
  std::string context_separator = "\n";
  std::map<std::string, std::string> greetings;       // "Good morning" per language
  std::map<std::string, std::string> language_names;  // code -> English name

  static const PromptTemplates& defaults();
  /// Overrides the defaults with any keys present in a JSON document.
  static PromptTemplates from_file(const std::filesystem::path& path);

  [[nodiscard]] std::string language_name(const std::string& code) const;
};

/// Builds the chat transcript for one translation request. The final turn is
/// always a user turn holding exactly the source sentence. Only prior context
/// is used. Throws ValidationError when a template's required field is missing.
Transcript build_prompt(const PromptRequest& request,
                        const PromptTemplates& templates = PromptTemplates::defaults());

/// Replaces every {key} in `text`.
std::string fill_placeholders(std::string text, const std::map<std::string, std::string>& values);

}  // namespace proverbkit
