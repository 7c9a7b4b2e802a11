#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "proverbkit/metrics.hpp"
#include "proverbkit/miner.hpp"

namespace pk = proverbkit;

namespace {

std::vector<std::string> random_words(std::size_t n, unsigned seed) {
  static const std::vector<std::string> vocab{"still", "waters", "run",  "deep", "the",   "early",
                                              "bird",  "catches", "worm", "a",    "stitch", "in",
                                              "time",  "saves",   "nine", "every", "cloud", "has"};
  std::mt19937 rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng() % vocab.size()]);
  return out;
}

std::string joined(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

void BM_SimilarityRatio(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = joined(random_words(n, 1));
  const auto b = joined(random_words(n, 2));
  for (auto _ : state) benchmark::DoNotOptimize(pk::similarity_ratio(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SimilarityRatio)->RangeMultiplier(2)->Range(4, 64)->Complexity();

void BM_Containment(benchmark::State& state) {
  const pk::TokenSequence proverb(random_words(5, 3));
  const pk::TokenSequence sentence(random_words(static_cast<std::size_t>(state.range(0)), 4));
  for (auto _ : state) benchmark::DoNotOptimize(pk::containment_score(proverb, sentence));
}
BENCHMARK(BM_Containment)->Arg(10)->Arg(25)->Arg(50);

void BM_LcsTokens(benchmark::State& state) {
  const auto a = random_words(static_cast<std::size_t>(state.range(0)), 5);
  const auto b = random_words(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(pk::lcs_len(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LcsTokens)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

void BM_SentenceBleu(benchmark::State& state) {
  const auto hyp = joined(random_words(20, 7)) + ".";
  const auto ref = joined(random_words(20, 8)) + ".";
  for (auto _ : state) benchmark::DoNotOptimize(pk::sentence_bleu(hyp, ref));
}
BENCHMARK(BM_SentenceBleu);

void BM_ChrfPP(benchmark::State& state) {
  const auto hyp = joined(random_words(20, 9)) + ".";
  const auto ref = joined(random_words(20, 10)) + ".";
  for (auto _ : state) benchmark::DoNotOptimize(pk::chrf_pp(hyp, ref));
}
BENCHMARK(BM_ChrfPP);

}  // namespace

BENCHMARK_MAIN();
