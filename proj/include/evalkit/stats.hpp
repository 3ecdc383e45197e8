#pragma once

// Offset analysis against human semantic-correctness labels, correlation
// (Pearson r, Kendall tau-b) and descriptive statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalkit/corpus.hpp"
#include "evalkit/error.hpp"
#include "evalkit/metrics.hpp"

namespace evalkit {

enum class PartitionKind { whole, correct, wrong };

inline std::string_view to_string(PartitionKind k) {
  switch (k) {
    case PartitionKind::whole: return "whole";
    case PartitionKind::correct: return "correct";
    case PartitionKind::wrong: return "wrong";
  }
  return "whole";
}

struct Partition {
  PartitionKind kind = PartitionKind::whole;
  std::vector<std::string> ids;  // corpus order
};

struct Partitions {
  Partition whole{PartitionKind::whole, {}};
  Partition correct{PartitionKind::correct, {}};
  Partition wrong{PartitionKind::wrong, {}};
  std::size_t unlabeled = 0;

  const Partition& get(PartitionKind k) const {
    switch (k) {
      case PartitionKind::correct: return correct;
      case PartitionKind::wrong: return wrong;
      default: return whole;
    }
  }
};

/// Splits the labeled samples by SC. Unlabeled samples are only counted.
inline Partitions partition_by_sc(const Corpus& c) {
  Partitions p;
  for (const auto& s : c.samples) {
    if (!s.sc) {
      ++p.unlabeled;
      continue;
    }
    p.whole.ids.push_back(s.id);
    (*s.sc == 1 ? p.correct : p.wrong).ids.push_back(s.id);
  }
  if (p.whole.ids.empty()) throw DataError("no labeled samples (all " + std::to_string(p.unlabeled) + " lack sc)");
  return p;
}

using ScoreTable = std::map<std::string, MetricVector, std::less<>>;

struct OffsetRow {
  MetricId metric;
  double mean_value = 0.0;
  double offset = 0.0;
};

struct OffsetResult {
  PartitionKind kind;
  std::size_t size = 0;
  double sc_mean = 0.0;
  std::vector<OffsetRow> rows;
};

/// Mean of each metric over the partition and its distance to the SC mean there.
inline OffsetResult offsets(const Corpus& c, const ScoreTable& scores, const Partition& part,
                            const std::vector<MetricId>& metrics) {
  if (part.ids.empty()) throw DataError("empty partition '" + std::string(to_string(part.kind)) + "'");
  OffsetResult out{part.kind, part.ids.size(), 0.0, {}};
  std::vector<double> sums(metrics.size(), 0.0);
  double sc_sum = 0.0;
  for (const auto& id : part.ids) {
    const Sample* s = c.find(id);
    if (!s || !s->sc) throw DataError("partition sample \"" + id + "\" is missing or unlabeled");
    sc_sum += *s->sc;
    auto it = scores.find(id);
    if (it == scores.end()) throw DataError("no scores for sample \"" + id + "\"");
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      auto v = it->second.find(metrics[k]);
      if (v == it->second.end())
        throw DataError("sample \"" + id + "\" has no " + std::string(metric_name(metrics[k])) + " score");
      sums[k] += v->second;
    }
  }
  const double n = static_cast<double>(part.ids.size());
  out.sc_mean = sc_sum / n;
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    const double mean = sums[k] / n;
    out.rows.push_back({metrics[k], mean, std::abs(mean - out.sc_mean)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Descriptive statistics

struct DescriptiveStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0, std = 0;
};

/// Quantile with linear interpolation between closest ranks: position (n-1)·p
/// in the sorted data.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Five-number summary, mean and population standard deviation.
inline DescriptiveStats describe(std::span<const double> values) {
  if (values.empty()) throw DataError("describe: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::ranges::sort(v);
  DescriptiveStats d;
  d.min = v.front();
  d.max = v.back();
  d.q1 = quantile_sorted(v, 0.25);
  d.median = quantile_sorted(v, 0.5);
  d.q3 = quantile_sorted(v, 0.75);
  double sum = 0;
  for (double x : v) sum += x;
  d.mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - d.mean) * (x - d.mean);
  d.std = std::sqrt(ss / static_cast<double>(v.size()));
  return d;
}

// ---------------------------------------------------------------------------
// Correlation

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
}

}  // namespace detail

/// Pearson r. nullopt when fewer than two pairs or either variable is constant.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Kendall tau-b: (C - D) / sqrt((C + D + Tx)(C + D + Ty)), where Tx counts
/// pairs tied only in x and Ty pairs tied only in y. nullopt when either
/// variable is entirely tied.
inline std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y);
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++ties_x;
      else if (dy == 0) ++ties_y;
      else if ((dx > 0) == (dy > 0)) ++concordant;
      else ++discordant;
    }
  }
  const double cd = static_cast<double>(concordant + discordant);
  const double denom = std::sqrt((cd + static_cast<double>(ties_x)) * (cd + static_cast<double>(ties_y)));
  if (denom == 0.0) return std::nullopt;
  return std::clamp(static_cast<double>(concordant - discordant) / denom, -1.0, 1.0);
}

struct CorrelationRow {
  MetricId metric;
  std::optional<double> pearson_r;
  std::optional<double> kendall_tau;
  std::size_t n = 0;
};

/// Correlation of each metric's per-sample score with SC over the labeled samples.
inline std::vector<CorrelationRow> correlate(const Corpus& c, const ScoreTable& scores,
                                             const std::vector<MetricId>& metrics) {
  std::vector<const Sample*> labeled;
  for (const auto& s : c.samples) {
    if (s.sc) labeled.push_back(&s);
  }
  if (labeled.size() < 2) throw DataError("correlation needs at least 2 labeled samples");
  std::vector<double> sc;
  for (const auto* s : labeled) sc.push_back(*s->sc);

  std::vector<CorrelationRow> rows;
  for (auto m : metrics) {
    std::vector<double> values;
    values.reserve(labeled.size());
    for (const auto* s : labeled) {
      auto it = scores.find(s->id);
      if (it == scores.end()) throw DataError("no scores for sample \"" + s->id + "\"");
      auto v = it->second.find(m);
      if (v == it->second.end())
        throw DataError("sample \"" + s->id + "\" has no " + std::string(metric_name(m)) + " score");
      values.push_back(v->second);
    }
    rows.push_back({m, pearson(values, sc), kendall_tau(values, sc), labeled.size()});
  }
  return rows;
}

}  // namespace evalkit
