#include "proverbkit/metrics.hpp"

#include <cmath>
#include <map>

#include "proverbkit/error.hpp"
#include "proverbkit/utf8.hpp"

namespace proverbkit {
namespace {

std::vector<std::string> split_ws(std::string_view text) {
  return tokenize(text, TokenScheme::kWhitespace).tokens();
}

template <typename Key>
using Counts = std::map<Key, double>;

Counts<std::vector<std::string>> word_ngrams(const std::vector<std::string>& tokens, int n) {
  Counts<std::vector<std::string>> out;
  const auto len = static_cast<int>(tokens.size());
  for (int i = 0; i + n <= len; ++i) {
    out[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] += 1.0;
  }
  return out;
}

Counts<std::u32string> char_ngrams(const std::u32string& chars, int n) {
  Counts<std::u32string> out;
  const auto len = static_cast<int>(chars.size());
  for (int i = 0; i + n <= len; ++i) out[chars.substr(static_cast<std::size_t>(i), n)] += 1.0;
  return out;
}

template <typename Key>
double clipped_matches(const Counts<Key>& hyp, const Counts<Key>& ref) {
  double m = 0.0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(count, it->second);
  }
  return m;
}

template <typename Key>
double total_count(const Counts<Key>& c) {
  double t = 0.0;
  for (const auto& [_, count] : c) t += count;
  return t;
}

// Word split used by chrF++: strip one leading or trailing ASCII punctuation mark.
std::vector<std::string> chrf_words(std::string_view text) {
  static const std::string_view kPuncts = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  std::vector<std::string> out;
  for (const auto& w : split_ws(text)) {
    if (utf8::length(w) == 1) {
      out.push_back(w);
    } else if (kPuncts.find(w.back()) != std::string_view::npos) {
      out.push_back(w.substr(0, w.size() - 1));
      out.push_back(w.substr(w.size() - 1));
    } else if (kPuncts.find(w.front()) != std::string_view::npos) {
      out.push_back(w.substr(0, 1));
      out.push_back(w.substr(1));
    } else {
      out.push_back(w);
    }
  }
  return out;
}

std::u32string chrf_chars(std::string_view text, bool keep_whitespace) {
  std::u32string cps = utf8::decode(text);
  if (keep_whitespace) {
    // str.split() + ' '.join(): collapse runs and strip the ends
    std::u32string out;
    for (const auto& tok : split_ws(text)) {
      if (!out.empty()) out.push_back(U' ');
      out += utf8::decode(tok);
    }
    return out;
  }
  std::erase_if(cps, [](char32_t c) { return utf8::is_space(c); });
  return cps;
}

}  // namespace

std::string_view to_string(MetricName name) {
  switch (name) {
    case MetricName::kBleu: return "BLEU";
    case MetricName::kChrfPP: return "CHRFPP";
    case MetricName::kComet: return "COMET";
  }
  return "BLEU";
}

MetricName metric_from_string(std::string_view text) {
  if (text == "BLEU") return MetricName::kBleu;
  if (text == "CHRFPP" || text == "CHRF++" || text == "chrF++") return MetricName::kChrfPP;
  if (text == "COMET") return MetricName::kComet;
  throw ValidationError("unknown metric '" + std::string(text) + "'");
}

double round_half_even(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::nearbyint(value * scale) / scale;
}

double MetricScore::rounded() const { return round_half_even(value, 2); }

double similarity_ratio(std::string_view a, std::string_view b) {
  const std::u32string ca = utf8::decode(a);
  const std::u32string cb = utf8::decode(b);
  return similarity_ratio<char32_t>(std::span<const char32_t>(ca), std::span<const char32_t>(cb));
}

double similarity_ratio(const TokenSequence& a, const TokenSequence& b) {
  return similarity_ratio<std::string>(std::span<const std::string>(a.tokens()),
                                       std::span<const std::string>(b.tokens()));
}

std::size_t lcs_len(std::string_view a, std::string_view b) {
  const std::u32string ca = utf8::decode(a);
  const std::u32string cb = utf8::decode(b);
  return lcs_len<char32_t>(std::span<const char32_t>(ca), std::span<const char32_t>(cb));
}

std::size_t lcs_len(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return lcs_len<std::string>(std::span<const std::string>(a), std::span<const std::string>(b));
}

MetricScore sentence_bleu(std::string_view hyp, std::string_view ref, const BleuConfig& config,
                          BleuStats* stats_out) {
  if (config.max_order < 1) throw ValidationError("BLEU max_order must be >= 1");
  auto prepare = [&](std::string_view s) {
    std::string text = config.lowercase ? utf8::to_lower(s) : std::string(s);
    if (config.tokenizer == BleuTokenizer::kIntl) text = intl_tokenize(text);
    return split_ws(text);
  };
  const auto hyp_tokens = prepare(hyp);
  const auto ref_tokens = prepare(ref);
  if (ref_tokens.empty()) throw ValidationError("BLEU is undefined for an empty reference");

  const int order = config.max_order;
  BleuStats st;
  st.hyp_len = hyp_tokens.size();
  st.ref_len = ref_tokens.size();
  st.correct.assign(order, 0.0);
  st.total.assign(order, 0.0);
  st.precisions.assign(order, 0.0);
  for (int n = 1; n <= order; ++n) {
    const auto h = word_ngrams(hyp_tokens, n);
    const auto r = word_ngrams(ref_tokens, n);
    st.correct[n - 1] = clipped_matches(h, r);
    st.total[n - 1] = total_count(h);
  }

  if (st.hyp_len < st.ref_len) {
    st.brevity_penalty =
        st.hyp_len > 0 ? std::exp(1.0 - static_cast<double>(st.ref_len) / st.hyp_len) : 0.0;
  }

  const MetricScore zero{MetricName::kBleu, 0.0};
  const bool any_correct =
      std::any_of(st.correct.begin(), st.correct.end(), [](double c) { return c > 0.0; });
  if (!any_correct) {
    if (stats_out) *stats_out = st;
    return zero;
  }

  double smooth_value = config.smooth_value;
  if (smooth_value <= 0.0) {
    smooth_value = config.smoothing == BleuSmoothing::kFloor ? 0.1 : 1.0;
  }
  double smooth_mteval = 1.0;
  int eff_order = order;
  std::vector<double> correct = st.correct;
  std::vector<double> total = st.total;
  for (int n = 1; n <= order; ++n) {
    if (config.smoothing == BleuSmoothing::kAddK && n > 1) {
      correct[n - 1] += smooth_value;
      total[n - 1] += smooth_value;
    }
    if (total[n - 1] == 0.0) break;
    if (config.effective_order) eff_order = n;
    if (correct[n - 1] == 0.0) {
      if (config.smoothing == BleuSmoothing::kExp) {
        smooth_mteval *= 2.0;
        st.precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1]);
      } else if (config.smoothing == BleuSmoothing::kFloor) {
        st.precisions[n - 1] = 100.0 * smooth_value / total[n - 1];
      }
    } else {
      st.precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1];
    }
  }

  double log_sum = 0.0;
  for (int n = 0; n < eff_order; ++n) {
    const double p = st.precisions[n];
    log_sum += p > 0.0 ? std::log(p) : -9999999999.0;
  }
  const double score = st.brevity_penalty * std::exp(log_sum / eff_order);
  if (stats_out) *stats_out = st;
  return {MetricName::kBleu, std::clamp(score, 0.0, 100.0)};
}

MetricScore chrf_pp(std::string_view hyp, std::string_view ref, const ChrfConfig& config) {
  if (config.char_order < 1 || config.word_order < 0 || config.beta <= 0.0) {
    throw ValidationError("invalid chrF configuration");
  }
  const std::string h = config.lowercase ? utf8::to_lower(hyp) : std::string(hyp);
  const std::string r = config.lowercase ? utf8::to_lower(ref) : std::string(ref);
  if (split_ws(r).empty()) throw ValidationError("chrF is undefined for an empty reference");

  struct OrderStats {
    double n_hyp, n_ref, n_match;
  };
  std::vector<OrderStats> stats;
  const auto hc = chrf_chars(h, config.whitespace);
  const auto rc = chrf_chars(r, config.whitespace);
  for (int n = 1; n <= config.char_order; ++n) {
    const auto hg = char_ngrams(hc, n);
    const auto rg = char_ngrams(rc, n);
    stats.push_back({total_count(hg), total_count(rg), clipped_matches(hg, rg)});
  }
  if (config.word_order > 0) {
    const auto hw = chrf_words(h);
    const auto rw = chrf_words(r);
    for (int n = 1; n <= config.word_order; ++n) {
      const auto hg = word_ngrams(hw, n);
      const auto rg = word_ngrams(rw, n);
      stats.push_back({total_count(hg), total_count(rg), clipped_matches(hg, rg)});
    }
  }

  constexpr double kEps = 1e-16;
  const double factor = config.beta * config.beta;
  double eps_score = 0.0;
  double avg_prec = 0.0;
  double avg_rec = 0.0;
  int effective_order = 0;
  for (const auto& s : stats) {
    const double prec = s.n_hyp > 0 ? s.n_match / s.n_hyp : kEps;
    const double rec = s.n_ref > 0 ? s.n_match / s.n_ref : kEps;
    const double denom = factor * prec + rec;
    eps_score += denom > 0 ? (1 + factor) * prec * rec / denom : kEps;
    if (s.n_hyp > 0 && s.n_ref > 0) {
      avg_prec += prec;
      avg_rec += rec;
      ++effective_order;
    }
  }
  if (config.eps_smoothing) {
    return {MetricName::kChrfPP, 100.0 * eps_score / static_cast<double>(stats.size())};
  }
  if (effective_order == 0) return {MetricName::kChrfPP, 0.0};
  avg_prec /= effective_order;
  avg_rec /= effective_order;
  if (avg_prec + avg_rec == 0.0) return {MetricName::kChrfPP, 0.0};
  const double score = (1 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec);
  return {MetricName::kChrfPP, 100.0 * score};
}

}  // namespace proverbkit
