#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "proverbkit/textnorm.hpp"

namespace proverbkit {

enum class MetricName { kBleu, kChrfPP, kComet };

std::string_view to_string(MetricName name);
MetricName metric_from_string(std::string_view text);

/// A metric value on the 0-100 scale.
struct MetricScore {
  MetricName name = MetricName::kBleu;
  double value = 0.0;

  /// Value rounded to two decimals, ties to even.
  [[nodiscard]] double rounded() const;
};

/// Rounds to `decimals` places with round-half-even.
double round_half_even(double value, int decimals);

// ---------------------------------------------------------------------------
// Sequence matching

/// A matching block: a[a_pos, a_pos+size) == b[b_pos, b_pos+size).
struct MatchBlock {
  std::size_t a_pos = 0;
  std::size_t b_pos = 0;
  std::size_t size = 0;
};

/// Longest common contiguous block inside a[alo,ahi) x b[blo,bhi). Among
/// equally long blocks the one with the smallest (a_pos, b_pos) wins.
template <typename T>
MatchBlock longest_block(std::span<const T> a, std::span<const T> b, std::size_t alo,
                         std::size_t ahi, std::size_t blo, std::size_t bhi) {
  MatchBlock best{alo, blo, 0};
  if (alo >= ahi || blo >= bhi) return best;
  const std::size_t width = bhi - blo;
  std::vector<std::size_t> prev(width + 1, 0);
  std::vector<std::size_t> cur(width + 1, 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      const std::size_t col = j - blo + 1;
      if (a[i] == b[j]) {
        const std::size_t k = prev[col - 1] + 1;
        cur[col] = k;
        // Strictly longer only: rows are scanned in order of end index, so
        // the first block of a given length has the smallest start.
        if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
      } else {
        cur[col] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

/// Total size of the recursively found common blocks (Ratcliff/Obershelp M).
template <typename T>
std::size_t matched_elements(std::span<const T> a, std::span<const T> b) {
  struct Range {
    std::size_t alo, ahi, blo, bhi;
  };
  std::size_t total = 0;
  std::vector<Range> stack{{0, a.size(), 0, b.size()}};
  while (!stack.empty()) {
    const Range r = stack.back();
    stack.pop_back();
    const MatchBlock m = longest_block<T>(a, b, r.alo, r.ahi, r.blo, r.bhi);
    if (m.size == 0) continue;
    total += m.size;
    if (r.alo < m.a_pos && r.blo < m.b_pos) stack.push_back({r.alo, m.a_pos, r.blo, m.b_pos});
    if (m.a_pos + m.size < r.ahi && m.b_pos + m.size < r.bhi) {
      stack.push_back({m.a_pos + m.size, r.ahi, m.b_pos + m.size, r.bhi});
    }
  }
  return total;
}

/// Ratcliff/Obershelp ratio 2M/(|a|+|b|). Arguments are put in a canonical
/// order first, so the result is symmetric. Two empty inputs score 1.0.
template <typename T>
double similarity_ratio(std::span<const T> a, std::span<const T> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) std::swap(a, b);
  const std::size_t m = matched_elements<T>(a, b);
  return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
}

/// Character-level (code point) ratio of two UTF-8 strings.
double similarity_ratio(std::string_view a, std::string_view b);

/// Token-level ratio.
double similarity_ratio(const TokenSequence& a, const TokenSequence& b);

/// Length of the longest common subsequence.
template <typename T>
std::size_t lcs_len(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t up = row[j + 1];
      row[j + 1] = (a[i] == b[j]) ? diag + 1 : std::max(up, row[j]);
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t lcs_len(std::string_view a, std::string_view b);
std::size_t lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b);

// ---------------------------------------------------------------------------
// Sentence-level lexical metrics (SacreBLEU-compatible)

enum class BleuSmoothing { kNone, kFloor, kAddK, kExp };
enum class BleuTokenizer { kNone, kIntl };

struct BleuConfig {
  int max_order = 4;
  BleuSmoothing smoothing = BleuSmoothing::kExp;
  double smooth_value = 0.0;  // used by floor (default 0.1) and add-k (default 1)
  BleuTokenizer tokenizer = BleuTokenizer::kIntl;
  bool lowercase = false;
  bool effective_order = true;
};

/// Sufficient statistics of one hypothesis/reference pair.
struct BleuStats {
  std::vector<double> correct;
  std::vector<double> total;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  double brevity_penalty = 1.0;
  std::vector<double> precisions;  // percent
};

/// Throws ValidationError if `ref` is empty after tokenization.
MetricScore sentence_bleu(std::string_view hyp, std::string_view ref, const BleuConfig& config = {},
                          BleuStats* stats = nullptr);

struct ChrfConfig {
  int char_order = 6;
  int word_order = 2;
  double beta = 2.0;
  bool lowercase = false;
  bool whitespace = false;
  bool eps_smoothing = false;
};

/// chrF++ (chrF when word_order == 0). Throws ValidationError on an empty reference.
MetricScore chrf_pp(std::string_view hyp, std::string_view ref, const ChrfConfig& config = {});

}  // namespace proverbkit
