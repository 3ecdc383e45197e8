#pragma once

// Output similarity metrics on a single (prediction, reference) pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ranges>
#include <string>
#include <string_view>
#include <vector>

#include "evalkit/error.hpp"
#include "evalkit/sequence.hpp"
#include "evalkit/textprep.hpp"

namespace evalkit {

// Canonical metric order. Results files, tables and reports all use it.
enum class MetricId : std::uint8_t {
  CA,
  ROUGE_1_P, ROUGE_1_R, ROUGE_1_F1,
  ROUGE_2_P, ROUGE_2_R, ROUGE_2_F1,
  ROUGE_3_P, ROUGE_3_R, ROUGE_3_F1,
  ROUGE_4_P, ROUGE_4_R, ROUGE_4_F1,
  ROUGE_L_P, ROUGE_L_R, ROUGE_L_F1,
  BLEU_1, BLEU_2, BLEU_3, BLEU_4,
  EM,
  METEOR,
  ED,
};

inline constexpr std::size_t kMetricCount = 23;

inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "CA",
    "ROUGE-1-P", "ROUGE-1-R", "ROUGE-1-F1",
    "ROUGE-2-P", "ROUGE-2-R", "ROUGE-2-F1",
    "ROUGE-3-P", "ROUGE-3-R", "ROUGE-3-F1",
    "ROUGE-4-P", "ROUGE-4-R", "ROUGE-4-F1",
    "ROUGE-L-P", "ROUGE-L-R", "ROUGE-L-F1",
    "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4",
    "EM", "METEOR", "ED"};

inline std::string_view metric_name(MetricId id) { return kMetricNames[static_cast<std::size_t>(id)]; }

inline std::optional<MetricId> parse_metric(std::string_view name) {
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (kMetricNames[i] == name) return static_cast<MetricId>(i);
  }
  return std::nullopt;
}

inline std::vector<MetricId> all_metrics() {
  std::vector<MetricId> ids;
  for (std::size_t i = 0; i < kMetricCount; ++i) ids.push_back(static_cast<MetricId>(i));
  return ids;
}

inline MetricId rouge_metric(int n, int component) {
  return static_cast<MetricId>(static_cast<int>(MetricId::ROUGE_1_P) + 3 * (n - 1) + component);
}

inline MetricId bleu_metric(int n) { return static_cast<MetricId>(static_cast<int>(MetricId::BLEU_1) + n - 1); }

/// Per-sample scores keyed by metric; iteration follows canonical order.
using MetricVector = std::map<MetricId, double>;

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

inline double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline PRF make_prf(double matches, double pred_total, double ref_total) {
  PRF s;
  s.precision = safe_div(matches, pred_total);
  s.recall = safe_div(matches, ref_total);
  s.f1 = safe_div(2.0 * s.precision * s.recall, s.precision + s.recall);
  return s;
}

}  // namespace detail

/// ROUGE-n: clipped n-gram overlap over prediction (P) and reference (R) n-gram totals.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
PRF rouge_n(const A& pred, const B& ref, std::size_t n) {
  const auto p = ngram_counts(pred, n);
  const auto r = ngram_counts(ref, n);
  const auto len_p = static_cast<std::size_t>(std::ranges::size(pred));
  const auto len_r = static_cast<std::size_t>(std::ranges::size(ref));
  const double total_p = len_p >= n ? static_cast<double>(len_p - n + 1) : 0.0;
  const double total_r = len_r >= n ? static_cast<double>(len_r - n + 1) : 0.0;
  return detail::make_prf(static_cast<double>(clipped_overlap(p, r)), total_p, total_r);
}

/// ROUGE-L: LCS length in place of the n-gram match count.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
PRF rouge_l(const A& pred, const B& ref) {
  return detail::make_prf(static_cast<double>(lcs_length(pred, ref)), static_cast<double>(std::ranges::size(pred)),
                          static_cast<double>(std::ranges::size(ref)));
}

// ---------------------------------------------------------------------------
// BLEU

enum class BleuSmoothing {
  none,         // any zero precision zeroes the score
  epsilon,      // zero precisions are replaced by a fixed epsilon
  exponential,  // k-th zero precision becomes 1 / (2^k * n-gram count)
};

inline std::string_view to_string(BleuSmoothing s) {
  switch (s) {
    case BleuSmoothing::none: return "none";
    case BleuSmoothing::epsilon: return "epsilon";
    case BleuSmoothing::exponential: return "exponential";
  }
  return "none";
}

inline BleuSmoothing parse_bleu_smoothing(std::string_view s) {
  if (s == "none") return BleuSmoothing::none;
  if (s == "epsilon") return BleuSmoothing::epsilon;
  if (s == "exponential") return BleuSmoothing::exponential;
  throw ConfigError("unknown BLEU smoothing '" + std::string(s) + "'");
}

struct BleuParams {
  BleuSmoothing smoothing = BleuSmoothing::none;
  double epsilon = 1e-9;
};

/// Sentence BLEU with uniform weights over orders 1..max_n and brevity penalty.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
double bleu(const A& pred, const B& ref, int max_n, const BleuParams& params = {}) {
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("BLEU order must be in 1..4");
  const auto c = static_cast<std::size_t>(std::ranges::size(pred));
  const auto r = static_cast<std::size_t>(std::ranges::size(ref));
  if (c == 0) return 0.0;

  double log_sum = 0.0;
  int zero_rank = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto order = static_cast<std::size_t>(n);
    const std::size_t total = c >= order ? c - order + 1 : 0;
    const std::size_t matched = clipped_overlap(ngram_counts(pred, order), ngram_counts(ref, order));
    double p = 0.0;
    if (matched > 0) {
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      switch (params.smoothing) {
        case BleuSmoothing::none:
          return 0.0;
        case BleuSmoothing::epsilon:
          p = params.epsilon;
          break;
        case BleuSmoothing::exponential:
          ++zero_rank;
          p = 1.0 / (std::ldexp(1.0, zero_rank) * static_cast<double>(std::max<std::size_t>(total, 1)));
          break;
      }
    }
    log_sum += std::log(p);
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return std::clamp(bp * std::exp(log_sum / max_n), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("METEOR alpha must be in (0,1)");
    if (!(beta > 0.0)) throw ConfigError("METEOR beta must be > 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("METEOR gamma must be in [0,1)");
  }
};

/// Exact-match unigram alignment: matches[i] is the reference index aligned to
/// prediction token i, or -1.
struct Alignment {
  std::vector<int> matches;
  std::size_t matched = 0;
  std::size_t chunks = 0;
};

namespace detail {

inline std::size_t count_chunks(const std::vector<int>& matches) {
  std::size_t chunks = 0;
  int prev = -2;
  for (int j : matches) {
    if (j >= 0 && j != prev + 1) ++chunks;
    prev = j >= 0 ? j : -2;
  }
  return chunks;
}

// Repeatedly aligns the longest common run of unaligned tokens. Always reaches
// the maximum match count; the chunk count is an upper bound.
template <typename A, typename B>
std::vector<int> greedy_alignment(const A& pred, const B& ref) {
  const std::size_t n = std::ranges::size(pred), m = std::ranges::size(ref);
  std::vector<int> match(n, -1);
  std::vector<bool> ref_used(m, false);
  while (true) {
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (match[i] >= 0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        std::size_t len = 0;
        while (i + len < n && j + len < m && match[i + len] < 0 && !ref_used[j + len] &&
               pred[i + len] == ref[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      match[best_i + k] = static_cast<int>(best_j + k);
      ref_used[best_j + k] = true;
    }
  }
  return match;
}

// Branch-and-bound over all maximum alignments, minimizing chunks. Gives up
// after `budget` nodes and keeps the best alignment found so far.
template <typename A, typename B>
class ChunkSearch {
 public:
  ChunkSearch(const A& pred, const B& ref, std::vector<int> seed, std::size_t budget)
      : best_(std::move(seed)), budget_(budget) {
    const std::size_t n = std::ranges::size(pred), m = std::ranges::size(ref);
    best_chunks_ = count_chunks(best_);
    // type ids for tokens, candidate reference positions per prediction token
    std::map<std::ranges::range_value_t<A>, int> ids;
    pred_type_.resize(n);
    for (std::size_t i = 0; i < n; ++i) pred_type_[i] = ids.try_emplace(pred[i], static_cast<int>(ids.size())).first->second;
    candidates_.assign(ids.size(), {});
    for (std::size_t j = 0; j < m; ++j) {
      if (auto it = ids.find(ref[j]); it != ids.end()) candidates_[it->second].push_back(static_cast<int>(j));
    }
    quota_.assign(ids.size(), 0);
    std::vector<int> pred_count(ids.size(), 0);
    for (int t : pred_type_) ++pred_count[t];
    for (std::size_t t = 0; t < ids.size(); ++t)
      quota_[t] = std::min(pred_count[t], static_cast<int>(candidates_[t].size()));
    left_in_pred_ = pred_count;
    ref_used_.assign(m, false);
    current_.assign(n, -1);
  }

  std::vector<int> run() {
    if (best_chunks_ > 1) dfs(0, 0);
    return best_;
  }

  bool exhausted() const { return nodes_ >= budget_; }

 private:
  void dfs(std::size_t i, std::size_t chunks) {
    if (nodes_++ >= budget_ || chunks >= best_chunks_) return;
    if (i == current_.size()) {
      best_ = current_;
      best_chunks_ = chunks;
      return;
    }
    const int t = pred_type_[i];
    --left_in_pred_[t];
    const int prev = i > 0 && current_[i - 1] >= 0 ? current_[i - 1] : -2;
    if (quota_[t] > 0) {
      // try the continuation of the current chunk first
      auto try_pos = [&](int j) {
        if (ref_used_[j]) return;
        ref_used_[j] = true;
        current_[i] = j;
        --quota_[t];
        dfs(i + 1, chunks + (j == prev + 1 ? 0 : 1));
        ++quota_[t];
        current_[i] = -1;
        ref_used_[j] = false;
      };
      const auto& cands = candidates_[t];
      if (prev >= 0 && std::ranges::binary_search(cands, prev + 1)) try_pos(prev + 1);
      for (int j : cands) {
        if (j != prev + 1) try_pos(j);
      }
    }
    // leaving token i unaligned is allowed only if the quota can still be met
    if (left_in_pred_[t] >= quota_[t]) dfs(i + 1, chunks);
    ++left_in_pred_[t];
  }

  std::vector<int> best_;
  std::size_t best_chunks_ = 0;
  std::size_t budget_;
  std::size_t nodes_ = 0;
  std::vector<int> pred_type_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> quota_;
  std::vector<int> left_in_pred_;
  std::vector<bool> ref_used_;
  std::vector<int> current_;
};

}  // namespace detail

inline constexpr std::size_t kMeteorSearchBudget = 200'000;

/// Maximum exact-match unigram alignment with the fewest chunks. The search is
/// exhaustive within `budget` nodes; past that the best alignment found
/// (never worse than greedy longest-run matching) is returned.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
Alignment align_unigrams(const A& pred, const B& ref, std::size_t budget = kMeteorSearchBudget) {
  auto seed = detail::greedy_alignment(pred, ref);
  detail::ChunkSearch<A, B> search(pred, ref, std::move(seed), budget);
  Alignment a;
  a.matches = search.run();
  a.matched = static_cast<std::size_t>(std::ranges::count_if(a.matches, [](int j) { return j >= 0; }));
  a.chunks = detail::count_chunks(a.matches);
  return a;
}

/// METEOR with exact matching only: F-mean weighted by alpha times a
/// fragmentation penalty gamma * (chunks / matches)^beta.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
double meteor(const A& pred, const B& ref, const MeteorParams& params = {}) {
  const auto c = static_cast<double>(std::ranges::size(pred));
  const auto r = static_cast<double>(std::ranges::size(ref));
  if (c == 0 || r == 0) return 0.0;
  const auto a = align_unigrams(pred, ref);
  if (a.matched == 0) return 0.0;
  const double m = static_cast<double>(a.matched);
  const double p = m / c, rec = m / r;
  const double fmean = p * rec / (params.alpha * p + (1.0 - params.alpha) * rec);
  const double penalty = params.gamma * std::pow(static_cast<double>(a.chunks) / m, params.beta);
  return std::clamp(fmean * (1.0 - penalty), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Character-level metrics

/// Decodes UTF-8 into code points; invalid bytes map to themselves.
inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = detail::utf8_len(lead);
    if (i + len > s.size()) len = 1;
    char32_t cp = lead;
    if (len > 1) {
      cp = lead & (0x7F >> len);
      for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

/// 1 - levenshtein / max length, over code points. Both empty gives 1.
inline double edit_distance_norm(std::string_view pred, std::string_view ref) {
  const auto a = decode_utf8(pred);
  const auto b = decode_utf8(ref);
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

namespace detail {

inline std::string trim_line_ends(std::string_view s) {
  std::string out;
  std::size_t start = 0;
  while (true) {
    auto end = s.find('\n', start);
    auto line = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    auto last = line.find_last_not_of(" \t\r");
    out.append(line.substr(0, last == std::string_view::npos ? 0 : last + 1));
    if (end == std::string_view::npos) break;
    out.push_back('\n');
    start = end + 1;
  }
  return out;
}

}  // namespace detail

/// 1 iff the snippets are byte-equal after trimming trailing whitespace on each line.
inline int exact_match(std::string_view pred, std::string_view ref) {
  return detail::trim_line_ends(pred) == detail::trim_line_ends(ref) ? 1 : 0;
}

}  // namespace evalkit
