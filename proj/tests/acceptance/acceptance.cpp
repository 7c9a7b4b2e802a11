// Acceptance criteria. Each criterion prints its checks and one final
// PASS/FAIL line; the exit code is 0 on pass, 1 on fail, 77 when the
// criterion cannot be checked here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "proverbkit/contamination.hpp"
#include "proverbkit/filterpipe.hpp"
#include "proverbkit/judge.hpp"
#include "proverbkit/metrics.hpp"
#include "proverbkit/miner.hpp"
#include "proverbkit/mock_backend.hpp"
#include "proverbkit/stages.hpp"
#include "test_support.hpp"

namespace pk = proverbkit;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kSkip = 77;

/// Collects check results for one criterion.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    std::printf("  [%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
    failures_ += !ok;
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: %.4f (want %.4f +- %g)", what.c_str(), actual, expected, tol);
    expect(std::abs(actual - expected) <= tol, buf);
  }
  [[nodiscard]] int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void runtime_check(Checks& c, Clock::time_point start, double budget) {
  const double s = seconds_since(start);
  char buf[96];
  std::snprintf(buf, sizeof buf, "runtime %.3f s (budget %.0f s)", s, budget);
  c.expect(s < budget, buf);
}

// ---- 1 -------------------------------------------------------------------

int metric_reproduction() {
  const auto start = Clock::now();
  Checks c;
  struct Row {
    const char* hyp;
    const char* ref;
    double bleu;
    double bleu_tol;
    double chrf;
    double chrf_tol;
    bool bleu_is_upper_bound;
  };
  const std::vector<Row> rows{
      {"Distance reveals the strength of a horse", "Distance determines the stamina of a horse.", 26.27, 0.5, 46.19,
       0.5, false},
      {"The look of a tiger, the heart of a rat.", "The face of a tiger, the heart of a mouse.", 71.03, 0.5, 80.81,
       0.5, false},
      {"Discipline brings forth filial children.", "Spare the rod and spoil the child.", 0.5, 0.0, 13.93, 1.0, true},
  };
  for (const auto& r : rows) {
    const double bleu = pk::sentence_bleu(r.hyp, r.ref).value;
    const double chrf = pk::chrf_pp(r.hyp, r.ref).value;
    const std::string label = std::string("\"") + r.hyp + "\"";
    if (r.bleu_is_upper_bound) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s BLEU: %.4f (want <= %.2f)", label.c_str(), bleu, r.bleu);
      c.expect(bleu <= r.bleu, buf);
    } else {
      c.near(bleu, r.bleu, r.bleu_tol, label + " BLEU");
    }
    c.near(chrf, r.chrf, r.chrf_tol, label + " chrF++");
  }
  for (const char* s : {"Spare the rod and spoil the child.", "The face of a tiger, the heart of a mouse."}) {
    c.near(pk::sentence_bleu(s, s).value, 100.0, 0.0, std::string("identical \"") + s + "\" BLEU");
    c.near(pk::chrf_pp(s, s).value, 100.0, 0.0, std::string("identical \"") + s + "\" chrF++");
  }
  runtime_check(c, start, 1.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 2 -------------------------------------------------------------------

int gamma_formula() {
  const auto start = Clock::now();
  Checks c;
  std::mt19937 rng(2024);
  const std::vector<std::string> vocab{"the", "cat", "sat", "on", "a", "mat", "and", "ran"};
  auto words = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng() % vocab.size()]);
    return out;
  };
  // Keeps each word of `base` with probability 1/2 and sprinkles noise.
  auto noisy_copy = [&](const std::vector<std::string>& base) {
    std::vector<std::string> out;
    for (const auto& w : base) {
      if (rng() % 2) out.push_back(w);
      if (rng() % 4 == 0) out.push_back(vocab[rng() % vocab.size()]);
    }
    if (out.size() > 12) out.resize(12);
    return out;
  };

  std::size_t mismatches = 0, out_of_range = 0, clamp_cases = 0, clamp_failures = 0;
  for (int i = 0; i < 200; ++i) {
    pk::ProbeSample s;
    s.id = "g" + std::to_string(i);
    s.language = "en";
    const auto context = words(1 + rng() % 8);
    s.context = pktest::join(context, 0, context.size());
    const auto sentence = words(2 + rng() % 23);
    s.sentence = pktest::join(sentence, 0, sentence.size());
    s.tau = std::uniform_real_distribution<double>(0.3, 0.8)(rng);
    std::tie(s.prefix, s.suffix) = pk::split_prefix(s.sentence, s.tau);
    auto suffix = pk::lcs_units(s.suffix, pk::LcsUnit::kToken);
    if (suffix.size() > 12) {
      suffix.resize(12);
      s.suffix = pktest::join(suffix, 0, suffix.size());
    }
    const auto with = noisy_copy(suffix);
    auto without = noisy_copy(suffix);
    const bool force_clamp = i % 5 == 0;
    if (force_clamp) without = suffix;  // the no-context completion already recalls everything
    s.completion_with_ctx = pktest::join(with, 0, with.size());
    s.completion_no_ctx = pktest::join(without, 0, without.size());

    const double lcs_c = static_cast<double>(pktest::exhaustive_lcs(with, suffix));
    const double lcs_0 = static_cast<double>(pktest::exhaustive_lcs(without, suffix));
    double expected = (lcs_c - lcs_0) / static_cast<double>(suffix.size());
    if (expected < 0.0) expected = 0.0;

    const double g = pk::gamma(s);
    mismatches += std::abs(g - expected) > 1e-12;
    out_of_range += !(g >= 0.0 && g <= 1.0);
    if (lcs_c <= lcs_0) {
      ++clamp_cases;
      clamp_failures += g != 0.0;
    }
  }
  c.expect(mismatches == 0, "200 fixtures agree with the exhaustive-LCS oracle (" + std::to_string(mismatches) +
                                " mismatches)");
  c.expect(out_of_range == 0, "gamma within [0,1] on every fixture");
  c.expect(clamp_cases >= 40 && clamp_failures == 0,
           std::to_string(clamp_cases) + " clamp cases (lcs_c <= lcs_0) all give 0");
  runtime_check(c, start, 10.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 3 -------------------------------------------------------------------

int mining_oracle() {
  const auto start = Clock::now();
  Checks c;
  std::mt19937 rng(31);
  const std::vector<std::string> vocab{"still", "waters", "run", "deep", "the", "early", "bird",
                                       "worm",  "catches", "stil", "water", "rund", "de", "a"};
  auto words = [&](std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng() % vocab.size()]);
    return out;
  };

  std::vector<pk::SentencePair> pairs;
  std::vector<pk::ProverbEntry> proverbs;
  std::size_t mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const auto proverb = words(1 + rng() % 6);
    auto sentence = words(rng() % 12);
    if (rng() % 2) {  // plant the proverb, sometimes with one word swapped
      auto planted = proverb;
      if (rng() % 2) planted[rng() % planted.size()] = vocab[rng() % vocab.size()];
      sentence.insert(sentence.begin() + static_cast<std::ptrdiff_t>(rng() % (sentence.size() + 1)),
                      planted.begin(), planted.end());
    }
    if (sentence.size() > 25) sentence.resize(25);
    if (sentence.empty()) sentence.push_back("x");
    const pk::TokenSequence p(proverb), s(sentence);
    const double got = pk::containment_score(p, s);
    const double want = pktest::window_oracle(proverb, sentence);
    mismatches += std::abs(got - want) > 1e-12;
    if (i < 60) {
      pairs.push_back({"doc" + std::to_string(i % 5), static_cast<std::size_t>(i), s.joined(), "t", "en", "de"});
      proverbs.push_back({"p" + std::to_string(i), p.joined(), "en", "", false, {}});
    }
  }
  c.expect(mismatches == 0,
           "500 random pairs match the all-windows oracle (" + std::to_string(mismatches) + " mismatches)");

  const pk::Corpus corpus(pairs);
  std::vector<double> thresholds(20);
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  for (auto& t : thresholds) t = dist(rng);
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<pk::MinedCandidate> previous;
  bool monotone = true;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    pk::MiningConfig config;
    config.threshold = thresholds[k];
    const auto found = pk::mine(corpus, proverbs, config);
    if (k > 0) {
      for (const auto& f : found) {
        monotone = monotone && std::find(previous.begin(), previous.end(), f) != previous.end();
      }
    }
    previous = found;
  }
  c.expect(monotone, "candidates at each of 20 rising thresholds are a subset of those at the previous one");
  runtime_check(c, start, 30.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 4 -------------------------------------------------------------------

pk::ScoredCandidate scored(std::size_t line, double overall) {
  pk::ScoredCandidate s;
  s.candidate.pair = {"d", line, "src", "tgt", "en", "zh"};
  s.candidate.proverb_id = "p";
  s.candidate.match_score = 1.0;
  s.candidate.phase = pk::Phase::kP2;
  s.llm_qe = 1.0;
  s.overall = overall;
  return s;
}

int filter_arithmetic() {
  const auto start = Clock::now();
  Checks c;
  pk::FilterConfig config;
  config.max_per_direction = 2000;
  const auto q = pk::quantile_threshold(std::vector<double>(7028, 5.0), config);
  c.near(q.q_min, 0.715424, 1e-6, "q_min for |D|=7028, cap 2000");
  c.expect(pk::fuse_scores(4.5, 0.9) == 9.0, "fusion (4.5, 0.9) -> 9.0 exactly");
  c.expect(pk::fuse_scores(3.0, 0.0) == 3.0, "fusion (3.0, 0.0) -> 3.0 exactly");

  // Uniform scores: the cap binds, every score ties at the threshold. Tie
  // tolerance means every candidate whose score equals the threshold stays,
  // and no candidate strictly above the threshold is dropped.
  std::vector<pk::ScoredCandidate> uniform;
  for (std::size_t i = 0; i < 7028; ++i) uniform.push_back(scored(i, 7.5));
  const auto kept_uniform = pk::filter_direction(uniform, config);
  c.expect(kept_uniform.size() == uniform.size(),
           "uniform fixture keeps all " + std::to_string(kept_uniform.size()) + " tied candidates");

  std::mt19937 rng(44);
  std::uniform_real_distribution<double> dist(4.0, 10.0);
  std::vector<pk::ScoredCandidate> spread;
  for (std::size_t i = 0; i < 7028; ++i) spread.push_back(scored(i, std::round(dist(rng) * 100.0) / 100.0));
  const auto kept = pk::filter_direction(spread, config);
  const double threshold = pk::quantile_threshold([&] {
    std::vector<double> v;
    for (const auto& s : spread) v.push_back(s.overall);
    return v;
  }(), config).threshold;
  std::size_t above = 0, at = 0;
  for (const auto& s : kept) (s.overall > threshold ? above : at)++;
  std::size_t ties_total = 0;
  for (const auto& s : spread) ties_total += s.overall == threshold;
  c.expect(above <= 2000 && kept.size() <= 2000 + ties_total,
           "spread fixture keeps " + std::to_string(kept.size()) + " (" + std::to_string(above) +
               " strictly above the threshold, " + std::to_string(at) + " tied) within cap 2000 plus ties");

  std::size_t not_idempotent = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<pk::ScoredCandidate> fixture;
    const std::size_t n = 1 + rng() % 200;
    for (std::size_t i = 0; i < n; ++i) fixture.push_back(scored(i, std::round(dist(rng) * 2.0) / 2.0));
    pk::FilterConfig small;
    small.max_per_direction = 1 + rng() % 50;
    const auto once = pk::filter_direction(fixture, small);
    not_idempotent += pk::filter_direction(once, small) != once;
  }
  c.expect(not_idempotent == 0, "filtering is idempotent on 100 random fixtures");
  runtime_check(c, start, 5.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 5 -------------------------------------------------------------------

std::map<std::string, std::string> outputs_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel.rfind("logs/", 0) == 0) continue;
    out[rel] = pktest::read_text(e.path());
  }
  return out;
}

int golden_run() {
  const auto start = Clock::now();
  Checks c;
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  ::unsetenv("PROVERBKIT_ENDPOINT");
  ::unsetenv("PROVERBKIT_CACHE_DIR");
  std::vector<std::map<std::string, std::string>> runs;
  for (int run = 0; run < 2; ++run) {
    pktest::TempDir dir;
    for (const auto* name : {"bitext.en-de.jsonl", "proverbs.jsonl", "mock.json", "pipeline.json"}) {
      fs::copy_file(pktest::data_path(name), dir / name);
    }
    try {
      const auto outcome = pk::run_pipeline(dir / "pipeline.json");
      runs.push_back(outputs_of(outcome.out_dir));
    } catch (const std::exception& e) {
      c.expect(false, std::string("pipeline run ") + std::to_string(run + 1) + " failed: " + e.what());
      return kFail;
    }
  }
  c.expect(runs[0] == runs[1], "two runs produce byte-identical outputs (" + std::to_string(runs[0].size()) +
                                   " files, logs excluded)");
  for (const auto& e : fs::directory_iterator(pktest::data_path("golden"))) {
    const auto name = e.path().filename().string();
    auto it = runs[0].find(name);
    c.expect(it != runs[0].end() && it->second == pktest::read_text(e.path()), name + " matches golden");
  }
  runtime_check(c, start, 60.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 6 -------------------------------------------------------------------

int judge_randomization() {
  const auto start = Clock::now();
  Checks c;
  pk::MockBackendOptions opts;
  opts.judge_policy = pk::JudgePolicy::kAlwaysA;
  const pk::MockBackend backend(opts);
  pk::ModelClientConfig config;
  config.endpoint = "http://in-process.invalid/v1/model";
  config.model_name = "mock-judge";
  config.backoff_initial = std::chrono::milliseconds(0);
  pk::ModelClient client(config, backend.as_transport());

  std::vector<pk::JudgeItem> items;
  for (std::size_t i = 0; i < 2000; ++i) {
    pk::JudgeItem item;
    item.id = "j" + std::to_string(i);
    item.source = "source " + std::to_string(i);
    item.reference = "reference " + std::to_string(i);
    item.hyp_model_x = "system x output " + std::to_string(i);
    item.hyp_model_y = "system y output " + std::to_string(i);
    item.seed = pk::derive_item_seed(20240917, i);
    items.push_back(item);
  }
  const auto w = pk::tally_winrates(pk::judge_all(items, client));
  char buf[160];
  std::snprintf(buf, sizeof buf, "|win_x - win_y| = |%.4f - %.4f| = %.4f < 0.05", w.win_x, w.win_y,
                std::abs(w.win_x - w.win_y));
  c.expect(std::abs(w.win_x - w.win_y) < 0.05, buf);
  c.near(w.win_x + w.win_y + w.tie, 1.0, 1e-9, "win_x + win_y + tie");
  c.expect(w.valid == 2000, std::to_string(w.valid) + " valid verdicts of 2000");
  runtime_check(c, start, 5.0);
  return c.failures() == 0 ? kPass : kFail;
}

// ---- 7 -------------------------------------------------------------------

int desk_scale_limits() {
  std::printf(
      "  Not checkable here: the model-comparison tables, the 22,704-pair sensitivity count, the judge\n"
      "  win-rate figure values and the exact per-language contamination percentages. They need the\n"
      "  original subtitle corpora and live models. Their pipelines are covered by criteria 2-6 and\n"
      "  the unit suite.\n");
  return kSkip;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for proverbkit."};
  int criterion = 0;
  app.add_option("--criterion", criterion, "Criterion to run (1-7); 0 runs all")->check(CLI::Range(0, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<int()>>> criteria{
      {"metric reproduction", metric_reproduction}, {"gamma formula", gamma_formula},
      {"mining oracle", mining_oracle},             {"filter arithmetic", filter_arithmetic},
      {"golden run", golden_run},                   {"judge randomization", judge_randomization},
      {"desk-scale limits", desk_scale_limits}};

  int worst = kPass;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (criterion != 0 && static_cast<std::size_t>(criterion) != i + 1) continue;
    std::printf("criterion %zu: %s\n", i + 1, criteria[i].first);
    int rc = kFail;
    try {
      rc = criteria[i].second();
    } catch (const std::exception& e) {
      std::printf("  [FAIL] unexpected exception: %s\n", e.what());
    }
    std::printf("%s criterion %zu: %s\n", rc == kPass ? "PASS" : (rc == kSkip ? "SKIP" : "FAIL"), i + 1,
                criteria[i].first);
    std::fflush(stdout);
    if (rc == kFail || (rc == kSkip && worst == kPass)) worst = rc;
  }
  return worst;
}
