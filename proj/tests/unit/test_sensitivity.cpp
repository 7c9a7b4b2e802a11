#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "fake_model.hpp"
#include "proverbkit/error.hpp"
#include "proverbkit/mock_backend.hpp"
#include "proverbkit/sensitivity.hpp"

namespace pk = proverbkit;

namespace {

/// Unit vector at `cos` to (1, 0).
std::vector<double> at_cosine(double cos) { return {cos, std::sqrt(1.0 - cos * cos)}; }

pk::HypothesisRecord hyp(std::string system, std::string ref_id, double cos,
                         std::map<std::string, double> scores) {
  pk::HypothesisRecord r;
  r.system_id = std::move(system);
  r.reference_id = std::move(ref_id);
  r.reference = "ref";
  r.hypothesis = "hyp of " + r.system_id;
  r.metric_scores = std::move(scores);
  r.embedding = at_cosine(cos);
  return r;
}

const pk::ReferenceEmbeddings kRef{{"r1", {1.0, 0.0}}, {"r2", {1.0, 0.0}}};

}  // namespace

TEST(Cosine, Examples) {
  EXPECT_NEAR(pk::cosine({1, 0}, {1, 1}), 0.70710678, 1e-8);
  EXPECT_DOUBLE_EQ(pk::cosine({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(pk::cosine({1, 0}, {-1, 0}), -1.0);
  EXPECT_DOUBLE_EQ(pk::cosine({1, 0}, {0, 1}), 0.0);
  EXPECT_THROW(pk::cosine({1, 0}, {1, 0, 0}), pk::ValidationError);
  EXPECT_THROW(pk::cosine({0, 0}, {1, 0}), pk::ValidationError);
}

TEST(Cosine, ScaleInvariant) {
  std::mt19937 rng(3);
  std::normal_distribution<double> d;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> u(16), v(16);
    for (auto& x : u) x = d(rng);
    for (auto& x : v) x = d(rng);
    const double base = pk::cosine(u, v);
    auto scaled = u;
    for (auto& x : scaled) x *= 37.5;
    EXPECT_NEAR(pk::cosine(scaled, v), base, 1e-12);
    EXPECT_NEAR(pk::cosine(v, u), base, 1e-12);
  }
}

TEST(UnstablePairs, SimilarEmbeddingsDivergentMetric) {
  const std::vector<pk::HypothesisRecord> records{
      hyp("sysA", "r1", 0.80, {{"BLEU", 24.08}, {"CHRFPP", 46.0}}),
      hyp("sysB", "r1", 0.78, {{"BLEU", 12.0}, {"CHRFPP", 40.0}}),
  };
  const auto pairs = pk::find_unstable_pairs(records, kRef);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].metric, "BLEU");
  EXPECT_EQ(pairs[0].first->system_id, "sysA");
  EXPECT_EQ(pairs[0].second->system_id, "sysB");
  EXPECT_NEAR(pairs[0].cos_first, 0.80, 1e-12);
  const auto row = pk::pair_row(pairs[0]);
  EXPECT_EQ(row.at("metric"), "BLEU");
}

TEST(UnstablePairs, CosineGapTooLarge) {
  const std::vector<pk::HypothesisRecord> records{
      hyp("sysA", "r1", 0.86, {{"BLEU", 40.0}}),
      hyp("sysB", "r1", 0.80, {{"BLEU", 10.0}}),
  };
  EXPECT_TRUE(pk::find_unstable_pairs(records, kRef).empty());
}

TEST(UnstablePairs, StrictBoundaries) {
  pk::SensitivityConfig config;
  config.cos_diff_max = 1.0;
  config.metric_diff_min = {{"BLEU", 5.0}};
  // Cosines 1 and 0 differ by exactly the bound.
  std::vector<pk::HypothesisRecord> records{hyp("a", "r1", 1.0, {{"BLEU", 50.0}}),
                                            hyp("b", "r1", 0.0, {{"BLEU", 10.0}})};
  EXPECT_TRUE(pk::find_unstable_pairs(records, kRef, config).empty());
  // Metric gap exactly at the threshold.
  records = {hyp("a", "r1", 0.5, {{"BLEU", 15.0}}), hyp("b", "r1", 0.5, {{"BLEU", 10.0}})};
  EXPECT_TRUE(pk::find_unstable_pairs(records, kRef, config).empty());
  records[0].metric_scores["BLEU"] = 15.5;
  EXPECT_EQ(pk::find_unstable_pairs(records, kRef, config).size(), 1u);
}

TEST(UnstablePairs, GroupsByReferenceAndSkipsMissingMetrics) {
  const std::vector<pk::HypothesisRecord> records{
      hyp("a", "r1", 0.5, {{"BLEU", 50.0}}),
      hyp("b", "r2", 0.5, {{"BLEU", 10.0}}),
      hyp("c", "r2", 0.5, {{"CHRFPP", 90.0}}),
  };
  EXPECT_TRUE(pk::find_unstable_pairs(records, kRef).empty());
}

TEST(UnstablePairs, InputOrderDoesNotMatter) {
  const std::vector<pk::HypothesisRecord> records{
      hyp("b", "r1", 0.50, {{"BLEU", 10.0}, {"COMET", 80.0}}),
      hyp("a", "r1", 0.51, {{"BLEU", 30.0}, {"COMET", 60.0}}),
  };
  const std::vector<pk::HypothesisRecord> reversed{records[1], records[0]};
  const auto forward = pk::find_unstable_pairs(records, kRef);
  const auto backward = pk::find_unstable_pairs(reversed, kRef);
  ASSERT_EQ(forward.size(), 2u);
  ASSERT_EQ(backward.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(forward[i].metric, backward[i].metric);
    EXPECT_EQ(forward[i].first->system_id, "a");
    EXPECT_EQ(backward[i].first->system_id, "a");
  }
  EXPECT_EQ(forward[0].metric, "BLEU");
  EXPECT_EQ(forward[1].metric, "COMET");
  EXPECT_EQ(pk::count_by_system(forward), (std::map<std::string, std::size_t>{{"a", 1}, {"b", 1}}));
  EXPECT_EQ(pk::count_by_system_per_metric(forward), (std::map<std::string, std::size_t>{{"a", 2}, {"b", 2}}));
}

TEST(UnstablePairs, LooserThresholdsFlagMore) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> cos(0.3, 0.95), score(0, 100);
  std::vector<pk::HypothesisRecord> records;
  for (int i = 0; i < 40; ++i) {
    records.push_back(hyp("s" + std::to_string(i % 8), i % 2 ? "r1" : "r2", cos(rng),
                          {{"BLEU", score(rng)}, {"CHRFPP", score(rng)}, {"COMET", score(rng)}}));
  }
  std::size_t previous = 0;
  for (double c : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    pk::SensitivityConfig config;
    config.cos_diff_max = c;
    const auto n = pk::find_unstable_pairs(records, kRef, config).size();
    EXPECT_GE(n, previous);
    previous = n;
  }
}

TEST(UnstablePairs, CountsMatchBruteForce) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> cos(0.5, 0.7), score(0, 100);
  std::vector<pk::HypothesisRecord> records;
  for (int i = 0; i < 30; ++i) {
    records.push_back(hyp("s" + std::to_string(i % 6), i % 3 ? "r1" : "r2", cos(rng),
                          {{"BLEU", score(rng)}, {"CHRFPP", score(rng)}, {"COMET", score(rng)}}));
    records.back().hypothesis += "#" + std::to_string(i);
  }
  const pk::SensitivityConfig config;
  std::size_t entries = 0;
  std::set<std::pair<std::size_t, std::size_t>> unique;
  std::map<std::string, std::size_t> per_metric, by_system_unique;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      if (records[i].reference_id != records[j].reference_id) continue;
      const double ci = (*records[i].embedding)[0], cj = (*records[j].embedding)[0];
      if (std::abs(ci - cj) >= config.cos_diff_max) continue;
      for (const auto& [metric, gap] : config.metric_diff_min) {
        if (std::abs(records[i].metric_scores.at(metric) - records[j].metric_scores.at(metric)) > gap) {
          ++entries;
          ++per_metric[metric];
          if (unique.emplace(i, j).second) {
            ++by_system_unique[records[i].system_id];
            ++by_system_unique[records[j].system_id];
          }
        }
      }
    }
  }
  const auto pairs = pk::find_unstable_pairs(records, kRef, config);
  const auto summary = pk::summarize(pairs);
  ASSERT_GT(entries, 0u);
  EXPECT_EQ(summary.flagged_entries, entries);
  EXPECT_EQ(summary.unique_pairs, unique.size());
  EXPECT_EQ(summary.per_metric, per_metric);
  EXPECT_EQ(summary.by_system_unique, by_system_unique);

  nlohmann::json j = summary;
  pk::SensitivitySummary back;
  pk::from_json(j, back);
  EXPECT_EQ(back.by_system_per_metric, summary.by_system_per_metric);
}

TEST(UnstablePairs, Errors) {
  auto r = hyp("a", "r1", 0.5, {});
  r.embedding.reset();
  EXPECT_THROW(pk::find_unstable_pairs({r}, kRef), pk::ValidationError);
  EXPECT_THROW(pk::find_unstable_pairs({hyp("a", "r9", 0.5, {})}, kRef), pk::ValidationError);
  pk::SensitivityConfig bad;
  bad.cos_diff_max = 0.0;
  EXPECT_THROW(bad.validate(), pk::ValidationError);
  bad = {};
  bad.metric_diff_min.clear();
  EXPECT_THROW(bad.validate(), pk::ValidationError);
}

TEST(EmbedRecords, FillsMissingAndEmbedsReferences) {
  const pk::MockBackend backend(pk::MockBackendOptions{});
  pk::ModelClient client(pktest::fake_config("mock-embed"), backend.as_transport());
  std::vector<pk::HypothesisRecord> records{hyp("a", "r1", 0.5, {}), hyp("b", "r1", 0.5, {})};
  records[0].embedding.reset();
  records[0].reference = records[1].reference = "a reference";
  const auto refs = pk::embed_records(records, client);
  ASSERT_EQ(refs.size(), 1u);
  EXPECT_EQ(refs.at("r1").size(), 64u);
  ASSERT_TRUE(records[0].embedding.has_value());
  EXPECT_EQ(records[0].embedding->size(), 64u);
  EXPECT_EQ(records[1].embedding->size(), 2u);

  records[1].reference = "different";
  EXPECT_THROW(pk::embed_records(records, client), pk::DataError);
}

TEST(HypothesisRecord, JsonRoundTrip) {
  auto r = hyp("a", "r1", 0.6, {{"BLEU", 1.5}});
  nlohmann::json j = r;
  EXPECT_EQ(j.get<pk::HypothesisRecord>(), r);
  r.embedding.reset();
  j = r;
  EXPECT_EQ(j.get<pk::HypothesisRecord>(), r);
}
