#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fake_model.hpp"
#include "oracles.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/filterpipe.hpp"
#include "test_support.hpp"

namespace pk = proverbkit;

namespace {

pk::MinedCandidate candidate(std::string doc, std::size_t line, std::string src = "src", std::string tgt = "tgt",
                             std::string proverb = "p") {
  pk::MinedCandidate c;
  c.pair = {std::move(doc), line, std::move(src), std::move(tgt), "en", "de"};
  c.proverb_id = std::move(proverb);
  c.match_score = 1.0;
  return c;
}

pk::ScoredCandidate scored(std::size_t line, double overall, std::string tgt_lang = "de") {
  pk::ScoredCandidate s;
  s.candidate = candidate("d", line);
  s.candidate.pair.tgt_lang = std::move(tgt_lang);
  s.candidate.phase = pk::Phase::kP2;
  s.llm_qe = 1.0;
  s.da_qe = 0.0;
  s.overall = overall;
  return s;
}

std::vector<pk::ScoredCandidate> scored_list(const std::vector<double>& scores) {
  std::vector<pk::ScoredCandidate> out;
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back(scored(i, scores[i]));
  return out;
}

pk::FilterConfig cap(std::size_t n) {
  pk::FilterConfig c;
  c.max_per_direction = n;
  return c;
}

const pk::ProverbEntry kProverb{"p", "still waters run deep", "en", "", true, {}};

}  // namespace

TEST(Fusion, Examples) {
  EXPECT_DOUBLE_EQ(pk::fuse_scores(4.5, 0.9), 9.0);
  EXPECT_DOUBLE_EQ(pk::fuse_scores(3.0, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(pk::fuse_scores(1.0, 1.0, 5.0), 6.0);
}

TEST(Fusion, RangeChecks) {
  EXPECT_THROW(pk::fuse_scores(0.5, 0.5), pk::ValidationError);
  EXPECT_THROW(pk::fuse_scores(5.5, 0.5), pk::ValidationError);
  EXPECT_THROW(pk::fuse_scores(3.0, -0.1), pk::ValidationError);
  EXPECT_THROW(pk::fuse_scores(3.0, 1.1), pk::ValidationError);
  EXPECT_THROW(pk::fuse_scores(3.0, 0.5, 0.0), pk::ValidationError);
  EXPECT_THROW(pk::fuse_scores(NAN, 0.5), pk::ValidationError);
}

TEST(Fusion, StrictlyIncreasingAndBounded) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> llm(1.0, 4.9), da(0.0, 0.99), step(0.001, 0.01);
  for (int i = 0; i < 200; ++i) {
    const double l = llm(rng), d = da(rng);
    const double base = pk::fuse_scores(l, d);
    EXPECT_GT(pk::fuse_scores(l + step(rng), d), base);
    EXPECT_GT(pk::fuse_scores(l, d + step(rng)), base);
    EXPECT_GE(base, l);
    EXPECT_LE(base, l + 5.0);
  }
}

TEST(Quantile, PaperScaleDirection) {
  std::vector<double> scores(7028);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = 4.0 + 6.0 * static_cast<double>(i) / 7028.0;
  const auto r = pk::quantile_threshold(scores, cap(2000));
  EXPECT_NEAR(r.q_min, 1.0 - 2000.0 / 7028.0, 1e-12);
  EXPECT_NEAR(r.q_min, 0.715424, 1e-6);
  EXPECT_EQ(r.rank, 5028u);
  EXPECT_DOUBLE_EQ(r.quantile_score, pktest::nearest_rank(scores, r.q_min));
  EXPECT_DOUBLE_EQ(r.threshold, std::max(r.quantile_score, 4.0));
}

TEST(Quantile, CapDoesNotBind) {
  std::vector<double> scores(1500, 7.0);
  scores[3] = 2.0;
  const auto r = pk::quantile_threshold(scores, cap(2000));
  EXPECT_DOUBLE_EQ(r.q_min, 0.0);
  EXPECT_EQ(r.rank, 1u);
  EXPECT_DOUBLE_EQ(r.threshold, 4.0);
}

TEST(Quantile, ExplicitList) {
  const std::vector<double> scores{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto r = pk::quantile_threshold(scores, cap(2000));
  EXPECT_DOUBLE_EQ(r.q_min, 0.0);
  EXPECT_DOUBLE_EQ(r.threshold, 4.0);
  const auto tight = pk::quantile_threshold(scores, cap(3));
  EXPECT_NEAR(tight.q_min, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(tight.quantile_score, 7.0);
  EXPECT_DOUBLE_EQ(tight.quantile_score, pktest::nearest_rank(scores, tight.q_min));
}

TEST(Quantile, MatchesNearestRankOracle) {
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> dist(1.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> scores(1 + rng() % 60);
    for (auto& s : scores) s = std::round(dist(rng) * 4.0) / 4.0;
    const auto config = cap(1 + rng() % 40);
    const auto r = pk::quantile_threshold(scores, config);
    EXPECT_DOUBLE_EQ(r.quantile_score, pktest::nearest_rank(scores, r.q_min));
  }
}

TEST(Quantile, EmptyRejected) {
  EXPECT_THROW(pk::quantile_threshold({}, cap(5)), pk::ValidationError);
}

TEST(FilterConfig, Validation) {
  EXPECT_NO_THROW(pk::FilterConfig{}.validate());
  EXPECT_THROW(cap(0).validate(), pk::ValidationError);
  pk::FilterConfig c;
  c.min_score = 0.5;
  EXPECT_THROW(c.validate(), pk::ValidationError);
  c.min_score = 10.5;
  EXPECT_THROW(c.validate(), pk::ValidationError);
}

TEST(FilterDirection, UniformScoresKeepTies) {
  // All tied at the threshold: every item is kept, none strictly above it.
  const auto out = pk::filter_direction(scored_list(std::vector<double>(50, 10.0)), cap(20));
  EXPECT_EQ(out.size(), 50u);
  for (const auto& s : out) EXPECT_DOUBLE_EQ(s.overall, 10.0);
}

TEST(FilterDirection, DistinctScoresRespectCap) {
  std::vector<double> scores;
  for (int i = 0; i < 50; ++i) scores.push_back(4.0 + 0.1 * i);
  const auto out = pk::filter_direction(scored_list(scores), cap(20));
  const auto r = pk::quantile_threshold(scores, cap(20));
  std::size_t above = 0;
  for (const auto& s : out) above += s.overall > r.threshold;
  EXPECT_LE(above, 20u);
  EXPECT_EQ(out.size(), 21u);
}

TEST(FilterDirection, AllBelowMinimum) {
  EXPECT_TRUE(pk::filter_direction(scored_list({1.0, 2.0, 3.9}), cap(10)).empty());
}

TEST(FilterDirection, NoCapKeepsAll) {
  const auto out = pk::filter_direction(scored_list({4.0, 9.0, 6.5}), cap(10));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_DOUBLE_EQ(out[0].overall, 9.0);
  EXPECT_DOUBLE_EQ(out[2].overall, 4.0);
}

TEST(FilterDirection, OrderBreaksTiesByKey) {
  auto list = scored_list({5.0, 5.0, 5.0});
  std::swap(list[0], list[2]);
  const auto out = pk::filter_direction(list, cap(10));
  EXPECT_EQ(out[0].candidate.pair.line_idx, 0u);
  EXPECT_EQ(out[2].candidate.pair.line_idx, 2u);
}

TEST(FilterDirection, MixedDirectionsRejected) {
  std::vector<pk::ScoredCandidate> list{scored(0, 5.0, "de"), scored(1, 5.0, "zh")};
  EXPECT_THROW(pk::filter_direction(list, cap(10)), pk::ValidationError);
}

TEST(FilterDirection, IdempotentAndMonotone) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> dist(1.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> scores(1 + rng() % 80);
    for (auto& s : scores) s = std::round(dist(rng) * 2.0) / 2.0;
    const auto config = cap(1 + rng() % 30);
    const auto once = pk::filter_direction(scored_list(scores), config);
    EXPECT_EQ(pk::filter_direction(once, config), once);
    auto stricter = config;
    stricter.min_score = 6.0;
    EXPECT_LE(pk::filter_direction(scored_list(scores), stricter).size(), once.size());
  }
}

TEST(UsageFilter, YesAndNo) {
  auto yes = std::make_shared<pktest::ScriptedTransport>([](const auto&) { return pktest::text_reply("Yes"); });
  pk::ModelClient yes_client(pktest::fake_config(), yes);
  EXPECT_EQ(pk::usage_filter(candidate("d", 0), kProverb, yes_client), pk::UsageVerdict::kUsed);
  auto no = std::make_shared<pktest::ScriptedTransport>([](const auto&) { return pktest::text_reply(" No\n"); });
  pk::ModelClient no_client(pktest::fake_config(), no);
  EXPECT_EQ(pk::usage_filter(candidate("d", 0), kProverb, no_client), pk::UsageVerdict::kNotUsed);
  const auto body = no->seen().at(0);
  EXPECT_EQ(body.at("temperature").get<double>(), 0.0);
  EXPECT_EQ(body.at("payload").at("task"), "usage");
  EXPECT_NE(pktest::last_user(body).find("still waters run deep"), std::string::npos);
}

TEST(UsageFilter, MaybeTwiceIsUndecided) {
  auto t = std::make_shared<pktest::ScriptedTransport>([](const auto&) { return pktest::text_reply("Maybe"); });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_EQ(pk::usage_filter(candidate("d", 0), kProverb, client), pk::UsageVerdict::kUndecided);
  ASSERT_EQ(t->calls(), 2u);
  EXPECT_FALSE(t->seen()[0].contains("attempt"));
  EXPECT_EQ(t->seen()[1].at("attempt"), 1);
}

TEST(UsageFilter, RetryCanRecover) {
  auto t = std::make_shared<pktest::ScriptedTransport>(
      [](const nlohmann::json& body) { return pktest::text_reply(body.contains("attempt") ? "Yes" : "yes!"); });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_EQ(pk::usage_filter(candidate("d", 0), kProverb, client), pk::UsageVerdict::kUsed);
}

TEST(LlmQe, MeanOfBothOrders) {
  auto t = std::make_shared<pktest::ScriptedTransport>([](const nlohmann::json& body) {
    const auto text = pktest::last_user(body);
    return pktest::text_reply(text.find("Source text: SRC") != std::string::npos ? "4" : "5");
  });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_DOUBLE_EQ(pk::llm_qe_score(candidate("d", 0, "SRC", "TGT"), client), 4.5);
  EXPECT_EQ(t->calls(), 2u);
}

TEST(LlmQe, EqualReplies) {
  auto t = std::make_shared<pktest::ScriptedTransport>([](const auto&) { return pktest::text_reply("3"); });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_DOUBLE_EQ(pk::llm_qe_score(candidate("d", 0), client), 3.0);
}

TEST(LlmQe, OrderInsensitive) {
  // r(a, b) depends on the order; the mean over both orders does not.
  auto t = std::make_shared<pktest::ScriptedTransport>([](const nlohmann::json& body) {
    const auto text = pktest::last_user(body);
    const bool src_first = text.find("Source text: alpha") != std::string::npos;
    return pktest::text_reply(src_first ? "2" : "5");
  });
  pk::ModelClient client(pktest::fake_config(), t);
  const double forward = pk::llm_qe_score(candidate("d", 0, "alpha", "beta"), client);
  const double backward = pk::llm_qe_score(candidate("d", 0, "beta", "alpha"), client);
  EXPECT_DOUBLE_EQ(forward, backward);
}

TEST(LlmQe, OutOfRangeReplyIsProtocolError) {
  auto t = std::make_shared<pktest::ScriptedTransport>([](const nlohmann::json& body) {
    const auto text = pktest::last_user(body);
    return pktest::text_reply(text.find("Source text: SRC") != std::string::npos ? "5" : "0");
  });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_THROW(pk::llm_qe_score(candidate("d", 0, "SRC", "TGT"), client), pk::ProtocolError);
}

TEST(LlmQe, ParseReply) {
  EXPECT_DOUBLE_EQ(pk::parse_qe_reply("4"), 4.0);
  EXPECT_DOUBLE_EQ(pk::parse_qe_reply(" 3.5\n"), 3.5);
  EXPECT_THROW(pk::parse_qe_reply("four"), pk::ProtocolError);
  EXPECT_THROW(pk::parse_qe_reply("4/5"), pk::ProtocolError);
  EXPECT_THROW(pk::parse_qe_reply(""), pk::ProtocolError);
  EXPECT_THROW(pk::parse_qe_reply("6"), pk::ProtocolError);
}

TEST(RunFilter, EndToEndWithScriptedModels) {
  std::vector<pk::MinedCandidate> cands;
  for (std::size_t i = 0; i < 6; ++i) cands.push_back(candidate("d", i, "s" + std::to_string(i), "t"));
  cands[1].proverb_id = "q";
  // Line 5's usage check is ambiguous; q is never used.
  auto llm = std::make_shared<pktest::ScriptedTransport>([](const nlohmann::json& body) {
    const auto text = pktest::last_user(body);
    if (body.at("payload").at("task") == "usage") {
      if (text.find("Sentence: s5") != std::string::npos) return pktest::text_reply("Perhaps");
      return pktest::text_reply(text.find("Proverb: q") != std::string::npos ? "No" : "Yes");
    }
    return pktest::text_reply("4");
  });
  auto da = std::make_shared<pktest::ScriptedTransport>([](const nlohmann::json& body) {
    const auto src = body.at("payload").at("source").get<std::string>();
    const double score = 0.5 + 0.1 * (src.back() - '0');
    return pk::TransportResponse{200, nlohmann::json{{"score", score}}.dump()};
  });
  pk::ModelClient llm_client(pktest::fake_config("llm"), llm);
  pk::ModelClient da_client(pktest::fake_config("da"), da);
  const std::vector<pk::ProverbEntry> proverbs{kProverb, {"q", "q", "en", "", false, {}}};
  const auto out = pk::run_filter(cands, proverbs, llm_client, da_client, cap(2));
  ASSERT_EQ(out.reports.size(), 1u);
  const auto& rep = out.reports[0];
  EXPECT_EQ(rep.p1, 6u);
  EXPECT_EQ(rep.not_used, 1u);
  EXPECT_EQ(rep.undecided, 1u);
  EXPECT_EQ(rep.used, 4u);
  ASSERT_TRUE(rep.quantile.has_value());
  EXPECT_EQ(rep.p2, out.kept.size());
  EXPECT_EQ(out.undecided, (std::vector<std::string>{"d#5:p"}));
  // Used lines 0, 2, 3, 4 score 4 + 5 * (0.5 + 0.1 * line); the cap keeps the top two plus the rank item.
  ASSERT_EQ(out.kept.size(), 3u);
  EXPECT_EQ(out.kept[0].candidate.pair.line_idx, 4u);
  EXPECT_NEAR(out.kept[0].overall, 4.0 + 5.0 * 0.9, 1e-9);
  for (const auto& k : out.kept) EXPECT_EQ(k.candidate.phase, pk::Phase::kP2);
}

TEST(RunFilter, UnknownProverbRejected) {
  auto t = std::make_shared<pktest::ScriptedTransport>([](const auto&) { return pktest::text_reply("Yes"); });
  pk::ModelClient client(pktest::fake_config(), t);
  EXPECT_THROW(pk::run_filter({candidate("d", 0, "s", "t", "zz")}, {kProverb}, client, client, cap(2)),
               pk::Error);
}

TEST(FilterPrompts, FromFileOverrides) {
  pktest::TempDir dir;
  pktest::write_text(dir / "p.json", R"({"usage_user": "P={proverb} S={sentence}"})");
  const auto p = pk::FilterPrompts::from_file(dir / "p.json");
  EXPECT_EQ(p.usage_user, "P={proverb} S={sentence}");
  EXPECT_EQ(p.qe_user, pk::FilterPrompts::defaults().qe_user);
}
