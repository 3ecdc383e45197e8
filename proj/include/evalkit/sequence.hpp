#pragma once

// Sequence primitives shared by the similarity metrics: n-gram windows,
// longest common subsequence, Levenshtein distance. All are generic over
// random-access ranges so they serve both token sequences and raw strings.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <ranges>
#include <stdexcept>
#include <string>
#include <vector>

namespace evalkit {

template <typename T>
using NgramCounts = std::map<std::vector<T>, std::size_t>;

/// All contiguous n-token windows of `seq`, in order. Yields max(0, len - n + 1) windows.
template <std::ranges::random_access_range R>
auto ngram_windows(const R& seq, std::size_t n) {
  using T = std::ranges::range_value_t<R>;
  if (n == 0) throw std::invalid_argument("ngram order must be >= 1");
  std::vector<std::vector<T>> out;
  const auto len = static_cast<std::size_t>(std::ranges::size(seq));
  if (len < n) return out;
  out.reserve(len - n + 1);
  auto it = std::ranges::begin(seq);
  for (std::size_t i = 0; i + n <= len; ++i) out.emplace_back(it + i, it + i + n);
  return out;
}

/// Multiset of n-grams as window -> count.
template <std::ranges::random_access_range R>
auto ngram_counts(const R& seq, std::size_t n) {
  NgramCounts<std::ranges::range_value_t<R>> counts;
  for (auto& w : ngram_windows(seq, n)) ++counts[std::move(w)];
  return counts;
}

/// Size of the multiset intersection of two n-gram count tables.
template <typename T>
std::size_t clipped_overlap(const NgramCounts<T>& a, const NgramCounts<T>& b) {
  std::size_t total = 0;
  for (const auto& [gram, count] : a) {
    if (auto it = b.find(gram); it != b.end()) total += std::min(count, it->second);
  }
  return total;
}

namespace detail {

// Two DP rows of m+1 cells; short inputs stay on the stack.
class DpRows {
 public:
  explicit DpRows(std::size_t cells) {
    if (cells > kInline) {
      heap_.resize(2 * cells);
      prev_ = heap_.data();
    } else {
      prev_ = inline_.data();
    }
    cur_ = prev_ + cells;
  }
  std::size_t* prev() { return prev_; }
  std::size_t* cur() { return cur_; }
  void swap() { std::swap(prev_, cur_); }

 private:
  static constexpr std::size_t kInline = 64;
  std::array<std::size_t, 2 * kInline> inline_;
  std::vector<std::size_t> heap_;
  std::size_t* prev_;
  std::size_t* cur_;
};

}  // namespace detail

/// Length of the longest common subsequence. O(|a|·|b|) time, O(min) memory.
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
std::size_t lcs_length(const A& a, const B& b) {
  const auto n = static_cast<std::size_t>(std::ranges::size(a));
  const auto m = static_cast<std::size_t>(std::ranges::size(b));
  if (n < m) return lcs_length(b, a);
  auto ai = std::ranges::begin(a);
  auto bi = std::ranges::begin(b);
  detail::DpRows rows(m + 1);
  std::fill_n(rows.prev(), m + 1, 0);
  rows.cur()[0] = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t* prev = rows.prev();
    std::size_t* cur = rows.cur();
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = (ai[i - 1] == bi[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    rows.swap();
  }
  return rows.prev()[m];
}

/// Unit-cost Levenshtein distance (insert, delete, substitute).
template <std::ranges::random_access_range A, std::ranges::random_access_range B>
std::size_t levenshtein(const A& a, const B& b) {
  const auto n = static_cast<std::size_t>(std::ranges::size(a));
  const auto m = static_cast<std::size_t>(std::ranges::size(b));
  auto ai = std::ranges::begin(a);
  auto bi = std::ranges::begin(b);
  detail::DpRows rows(m + 1);
  for (std::size_t j = 0; j <= m; ++j) rows.prev()[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t* prev = rows.prev();
    std::size_t* cur = rows.cur();
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ai[i - 1] == bi[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    rows.swap();
  }
  return rows.prev()[m];
}

}  // namespace evalkit
