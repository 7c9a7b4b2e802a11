#pragma once

// Slow, obviously-correct reference implementations used as test oracles.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "proverbkit/utf8.hpp"

namespace pktest {

// Textbook Ratcliff/Obershelp: scan every (i, j) start for the longest block,
// earliest start wins, then recurse on both sides.
template <typename T>
std::size_t naive_matches(const std::vector<T>& a, std::size_t alo, std::size_t ahi,
                          const std::vector<T>& b, std::size_t blo, std::size_t bhi) {
  std::size_t bi = alo, bj = blo, bk = 0;
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = 0;
      while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) ++k;
      if (k > bk) {
        bi = i;
        bj = j;
        bk = k;
      }
    }
  }
  if (bk == 0) return 0;
  return bk + naive_matches(a, alo, bi, b, blo, bj) + naive_matches(a, bi + bk, ahi, b, bj + bk, bhi);
}

template <typename T>
double naive_ratio(std::vector<T> a, std::vector<T> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (b < a) std::swap(a, b);
  return 2.0 * static_cast<double>(naive_matches(a, 0, a.size(), b, 0, b.size())) /
         static_cast<double>(a.size() + b.size());
}

inline double naive_char_ratio(const std::string& a, const std::string& b) {
  const auto da = proverbkit::utf8::decode(a);
  const auto db = proverbkit::utf8::decode(b);
  return naive_ratio(std::vector<char32_t>(da.begin(), da.end()), std::vector<char32_t>(db.begin(), db.end()));
}

// Longest common subsequence by trying every subsequence of the shorter side.
template <typename Seq>
std::size_t exhaustive_lcs(const Seq& a, const Seq& b) {
  const Seq& s = a.size() <= b.size() ? a : b;
  const Seq& t = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << s.size()); ++mask) {
    std::size_t pos = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < s.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (pos < t.size() && t[pos] != s[i]) ++pos;
      if (pos == t.size()) {
        ok = false;
      } else {
        ++pos;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

inline std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += words[i];
  }
  return out;
}

// Containment by enumerating every window whose token length is in [ceil(p/2), 2p].
inline double window_oracle(const std::vector<std::string>& proverb, const std::vector<std::string>& sentence) {
  const std::string p = join(proverb, 0, proverb.size());
  double best = 0.0;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    for (std::size_t j = i + 1; j <= sentence.size(); ++j) {
      const std::size_t len = j - i;
      if (2 * len < proverb.size() || len > 2 * proverb.size()) continue;
      best = std::max(best, naive_char_ratio(p, join(sentence, i, j)));
    }
  }
  return best;
}

// Nearest rank: the ceil(q * n)-th smallest score, at least the first.
inline double nearest_rank(std::vector<double> scores, double q) {
  std::sort(scores.begin(), scores.end());
  std::size_t rank = 1;
  while (static_cast<double>(rank) < q * static_cast<double>(scores.size()) - 1e-9) ++rank;
  return scores[std::min(rank, scores.size()) - 1];
}

}  // namespace pktest
