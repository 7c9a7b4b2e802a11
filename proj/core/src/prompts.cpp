#include "proverbkit/prompts.hpp"

#include <algorithm>

#include "proverbkit/error.hpp"
#include "proverbkit/records.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {

std::string_view to_string(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kZeroShot: return "zero_shot";
    case TemplateKind::kOneShot: return "one_shot";
    case TemplateKind::kExplanation: return "explanation";
    case TemplateKind::kDialogueContext: return "dialogue_context";
    case TemplateKind::kConcatContext: return "concat_context";
  }
  return "zero_shot";
}

TemplateKind template_from_string(std::string_view text) {
  for (TemplateKind k : all_templates()) {
    if (to_string(k) == text) return k;
  }
  throw ValidationError("unknown prompt template '" + std::string(text) + "'");
}

const std::vector<TemplateKind>& all_templates() {
  static const std::vector<TemplateKind> kinds{
      TemplateKind::kZeroShot, TemplateKind::kOneShot, TemplateKind::kExplanation,
      TemplateKind::kDialogueContext, TemplateKind::kConcatContext};
  return kinds;
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates t = [] {
    PromptTemplates d;
    d.system_translate =
        "You are a professional translator. Translate the given {src} text into {tgt}. "
        "Return only the translation without any irrelevant content.";
    d.system_explanation =
        " The source text may contain a proverb. Explanation of the proverb: {explanation}";
    d.system_explanation_named =
        " The source text may contain the proverb \"{proverb}\". Explanation of the proverb: "
        "{explanation}";
    d.greetings = {{"en", "Good morning"},
                   {"de", "Guten Morgen"},
                   {"bn", "সুপ্রভাত"},
                   {"id", "Selamat pagi"},
                   {"zh", "早上好"}};
    d.language_names = {{"en", "English"},
                        {"de", "German"},
                        {"bn", "Bengali"},
                        {"id", "Indonesian"},
                        {"zh", "Chinese"}};
    return d;
  }();
  return t;
}

PromptTemplates PromptTemplates::from_file(const std::filesystem::path& path) {
  PromptTemplates t = defaults();
  const Json doc = records::read_document(path);
  try {
    t.system_translate = doc.value("system_translate", t.system_translate);
    t.system_explanation = doc.value("system_explanation", t.system_explanation);
    t.system_explanation_named = doc.value("system_explanation_named", t.system_explanation_named);
    t.context_separator = doc.value("context_separator", t.context_separator);
    if (doc.contains("greetings")) {
      for (const auto& [k, v] : doc["greetings"].items()) t.greetings[k] = v.get<std::string>();
    }
    if (doc.contains("language_names")) {
      for (const auto& [k, v] : doc["language_names"].items()) {
        t.language_names[k] = v.get<std::string>();
      }
    }
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return t;
}

std::string PromptTemplates::language_name(const std::string& code) const {
  auto it = language_names.find(code);
  return it == language_names.end() ? code : it->second;
}

std::string fill_placeholders(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string needle = "{" + key + "}";
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + value.size())) {
      text.replace(pos, needle.size(), value);
    }
  }
  return text;
}

Transcript build_prompt(const PromptRequest& req, const PromptTemplates& templates) {
  if (utf8::trim(req.source).empty()) throw ValidationError("prompt source sentence is empty");
  const std::map<std::string, std::string> vars{
      {"src", templates.language_name(req.src_lang)},
      {"tgt", templates.language_name(req.tgt_lang)},
      {"proverb", req.proverb.value_or("")},
      {"explanation", req.proverb_explanation.value_or("")}};

  Transcript out;
  std::string system = fill_placeholders(templates.system_translate, vars);

  switch (req.kind) {
    case TemplateKind::kZeroShot:
      out.push_back({Role::kSystem, system});
      break;

    case TemplateKind::kOneShot: {
      auto src_it = templates.greetings.find(req.src_lang);
      auto tgt_it = templates.greetings.find(req.tgt_lang);
      if (src_it == templates.greetings.end() || tgt_it == templates.greetings.end()) {
        throw ValidationError("no one-shot greeting for " + req.src_lang + "->" + req.tgt_lang);
      }
      out.push_back({Role::kSystem, system});
      out.push_back({Role::kUser, src_it->second});
      out.push_back({Role::kAssistant, tgt_it->second});
      break;
    }

    case TemplateKind::kExplanation: {
      if (!req.proverb_explanation || utf8::trim(*req.proverb_explanation).empty()) {
        throw ValidationError("explanation template requires a proverb explanation");
      }
      const bool named = req.proverb && !utf8::trim(*req.proverb).empty();
      system += fill_placeholders(
          named ? templates.system_explanation_named : templates.system_explanation, vars);
      out.push_back({Role::kSystem, system});
      break;
    }

    case TemplateKind::kDialogueContext: {
      if (!req.context) throw ValidationError("dialogue template requires a context window");
      out.push_back({Role::kSystem, system});
      std::vector<const SentencePair*> usable;
      for (const auto& p : req.context->prior) {
        if (!utf8::trim(p.source).empty() && !utf8::trim(p.target).empty()) usable.push_back(&p);
      }
      const std::size_t first = usable.size() > kMaxDialogueRounds ? usable.size() - kMaxDialogueRounds : 0;
      for (std::size_t i = first; i < usable.size(); ++i) {
        out.push_back({Role::kUser, usable[i]->source});
        out.push_back({Role::kAssistant, usable[i]->target});
      }
      break;
    }

    case TemplateKind::kConcatContext: {
      if (!req.context) throw ValidationError("concatenation template requires a context window");
      out.push_back({Role::kSystem, system});
      std::string sources;
      std::string targets;
      for (const auto& p : req.context->prior) {
        if (utf8::trim(p.source).empty() || utf8::trim(p.target).empty()) continue;
        if (!sources.empty()) {
          sources += templates.context_separator;
          targets += templates.context_separator;
        }
        sources += p.source;
        targets += p.target;
      }
      if (!sources.empty()) {
        out.push_back({Role::kUser, sources});
        out.push_back({Role::kAssistant, targets});
      }
      break;
    }
  }
  out.push_back({Role::kUser, req.source});
  return out;
}

}  // namespace proverbkit
