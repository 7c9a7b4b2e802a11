#include <gtest/gtest.h>

#include <random>

#include "proverbkit/error.hpp"
#include "proverbkit/prompts.hpp"
#include "test_support.hpp"

namespace pk = proverbkit;

namespace {

pk::ContextWindow window(std::size_t prior, std::size_t following = 0) {
  pk::ContextWindow w;
  for (std::size_t i = 0; i < prior; ++i) {
    w.prior.push_back({"d", i, "src " + std::to_string(i), "tgt " + std::to_string(i), "en", "de"});
  }
  for (std::size_t i = 0; i < following; ++i) {
    w.following.push_back({"d", 100 + i, "after", "danach", "en", "de"});
  }
  return w;
}

pk::PromptRequest request(pk::TemplateKind kind, std::string source = "Hello") {
  pk::PromptRequest r;
  r.kind = kind;
  r.source = std::move(source);
  r.src_lang = "en";
  r.tgt_lang = "de";
  return r;
}

}  // namespace

TEST(Prompts, ZeroShotShape) {
  const auto t = pk::build_prompt(request(pk::TemplateKind::kZeroShot));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].role, pk::Role::kSystem);
  EXPECT_NE(t[0].content.find("professional translator"), std::string::npos);
  EXPECT_NE(t[0].content.find("English"), std::string::npos);
  EXPECT_NE(t[0].content.find("German"), std::string::npos);
  EXPECT_EQ(t[1], (pk::ChatTurn{pk::Role::kUser, "Hello"}));
}

TEST(Prompts, OneShotGreeting) {
  const auto t = pk::build_prompt(request(pk::TemplateKind::kOneShot));
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1], (pk::ChatTurn{pk::Role::kUser, "Good morning"}));
  EXPECT_EQ(t[2], (pk::ChatTurn{pk::Role::kAssistant, "Guten Morgen"}));
  auto zh = request(pk::TemplateKind::kOneShot);
  zh.tgt_lang = "zh";
  EXPECT_EQ(pk::build_prompt(zh)[2].content, "早上好");
  auto unknown = request(pk::TemplateKind::kOneShot);
  unknown.tgt_lang = "fr";
  EXPECT_THROW(pk::build_prompt(unknown), pk::ValidationError);
}

TEST(Prompts, ExplanationInSystemMessage) {
  auto r = request(pk::TemplateKind::kExplanation);
  EXPECT_THROW(pk::build_prompt(r), pk::ValidationError);
  r.proverb_explanation = "  ";
  EXPECT_THROW(pk::build_prompt(r), pk::ValidationError);
  r.proverb_explanation = "Deeds matter more than promises.";
  auto t = pk::build_prompt(r);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NE(t[0].content.find("proverb"), std::string::npos);
  EXPECT_NE(t[0].content.find("Deeds matter more than promises."), std::string::npos);
  r.proverb = "Actions speak louder than words";
  t = pk::build_prompt(r);
  EXPECT_NE(t[0].content.find("\"Actions speak louder than words\""), std::string::npos);
}

TEST(Prompts, DialogueRounds) {
  auto r = request(pk::TemplateKind::kDialogueContext);
  EXPECT_THROW(pk::build_prompt(r), pk::ValidationError);
  r.context = window(3, 2);
  const auto t = pk::build_prompt(r);
  ASSERT_EQ(t.size(), 8u);
  EXPECT_EQ(t[1], (pk::ChatTurn{pk::Role::kUser, "src 0"}));
  EXPECT_EQ(t[6], (pk::ChatTurn{pk::Role::kAssistant, "tgt 2"}));
  for (const auto& turn : t) EXPECT_EQ(turn.content.find("after"), std::string::npos);
}

TEST(Prompts, DialogueCapsAtFiveMostRecent) {
  auto r = request(pk::TemplateKind::kDialogueContext);
  r.context = window(9);
  const auto t = pk::build_prompt(r);
  ASSERT_EQ(t.size(), 1u + 2u * pk::kMaxDialogueRounds + 1u);
  EXPECT_EQ(t[1].content, "src 4");
  EXPECT_EQ(t[10].content, "tgt 8");
}

TEST(Prompts, ConcatOneRound) {
  auto r = request(pk::TemplateKind::kConcatContext);
  r.context = window(3);
  const auto t = pk::build_prompt(r);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[1], (pk::ChatTurn{pk::Role::kUser, "src 0\nsrc 1\nsrc 2"}));
  EXPECT_EQ(t[2], (pk::ChatTurn{pk::Role::kAssistant, "tgt 0\ntgt 1\ntgt 2"}));
  r.context = window(0, 2);
  EXPECT_EQ(pk::build_prompt(r).size(), 2u);
}

TEST(Prompts, EmptySourceRejected) {
  EXPECT_THROW(pk::build_prompt(request(pk::TemplateKind::kZeroShot, " ")), pk::ValidationError);
}

TEST(Prompts, FinalTurnIsSourceProperty) {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    for (auto kind : pk::all_templates()) {
      auto r = request(kind, "sentence " + std::to_string(trial));
      r.proverb_explanation = "meaning";
      r.context = window(rng() % 12, rng() % 3);
      const auto t = pk::build_prompt(r);
      EXPECT_EQ(t.back(), (pk::ChatTurn{pk::Role::kUser, r.source}));
      EXPECT_EQ(t.front().role, pk::Role::kSystem);
      std::size_t rounds = 0;
      for (const auto& turn : t) rounds += turn.role == pk::Role::kAssistant;
      if (kind == pk::TemplateKind::kDialogueContext) EXPECT_LE(rounds, pk::kMaxDialogueRounds);
      if (kind == pk::TemplateKind::kConcatContext) EXPECT_EQ(rounds, r.context->prior.empty() ? 0u : 1u);
    }
  }
}

TEST(Prompts, TemplateNames) {
  for (auto kind : pk::all_templates()) EXPECT_EQ(pk::template_from_string(pk::to_string(kind)), kind);
  EXPECT_EQ(pk::to_string(pk::TemplateKind::kConcatContext), "concat_context");
  EXPECT_THROW(pk::template_from_string("few_shot"), pk::ValidationError);
}

TEST(Prompts, Placeholders) {
  EXPECT_EQ(pk::fill_placeholders("{a} and {b} and {a} {c}", {{"a", "x"}, {"b", "y"}}), "x and y and x {c}");
}

TEST(Prompts, TemplatesFromFile) {
  pktest::TempDir dir;
  pktest::write_text(dir / "t.json",
                     R"({"system_translate": "Translate {src} to {tgt}.", "context_separator": " | ",
                         "greetings": {"fr": "Bonjour"}, "language_names": {"fr": "French"}})");
  const auto t = pk::PromptTemplates::from_file(dir / "t.json");
  EXPECT_EQ(t.greetings.at("fr"), "Bonjour");
  auto r = request(pk::TemplateKind::kOneShot);
  r.tgt_lang = "fr";
  const auto out = pk::build_prompt(r, t);
  EXPECT_EQ(out[0].content, "Translate English to French.");
  EXPECT_EQ(out[2].content, "Bonjour");
  auto c = request(pk::TemplateKind::kConcatContext);
  c.context = window(2);
  EXPECT_EQ(pk::build_prompt(c, t)[1].content, "src 0 | src 1");
}
