#pragma once

// Rendering of analysis results: offset tables, correlation tables and
// boxplot data, as plain text, CSV or Markdown. Numbers use 3 decimals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "evalkit/corpus.hpp"
#include "evalkit/error.hpp"
#include "evalkit/stats.hpp"

namespace evalkit {

enum class ReportFormat { text, csv, markdown };

inline std::string_view extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::text: return "txt";
    case ReportFormat::csv: return "csv";
    case ReportFormat::markdown: return "md";
  }
  return "txt";
}

inline constexpr int kReportDecimals = 3;

inline std::string fmt3(double v) { return format_fixed(v, kReportDecimals); }

enum class Flag { none, best, worst };

namespace detail {

inline std::string_view flag_name(Flag f) {
  switch (f) {
    case Flag::best: return "best";
    case Flag::worst: return "worst";
    default: return "";
  }
}

// Flags the extreme entries of a column. `lower_is_better` picks which end is
// "best"; ties share the flag; a constant column is flagged best only.
inline std::vector<Flag> flag_extremes(const std::vector<std::optional<double>>& v, bool lower_is_better) {
  std::vector<Flag> flags(v.size(), Flag::none);
  std::optional<double> lo, hi;
  for (const auto& x : v) {
    if (!x) continue;
    lo = lo ? std::min(*lo, *x) : *x;
    hi = hi ? std::max(*hi, *x) : *x;
  }
  if (!lo) return flags;
  const double best = lower_is_better ? *lo : *hi;
  const double worst = lower_is_better ? *hi : *lo;
  constexpr double tol = 1e-12;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) continue;
    if (std::abs(*v[i] - best) <= tol) flags[i] = Flag::best;
    else if (std::abs(*v[i] - worst) <= tol) flags[i] = Flag::worst;
  }
  return flags;
}

inline std::string decorate(const std::string& cell, Flag f) {
  if (f == Flag::none) return cell;
  return cell + " (" + std::string(flag_name(f)) + ")";
}

// Grid of string cells rendered in one of the three formats.
struct Grid {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> rule_before;  // row indices preceded by a separator (text/markdown)
  std::vector<std::string> notes;

  std::string render(ReportFormat f) const {
    std::ostringstream out;
    switch (f) {
      case ReportFormat::csv: {
        auto line = [&](const std::vector<std::string>& cells) {
          for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
          out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        break;
      }
      case ReportFormat::markdown: {
        auto line = [&](const std::vector<std::string>& cells) {
          out << '|';
          for (const auto& c : cells) out << ' ' << c << " |";
          out << '\n';
        };
        line(header);
        out << '|';
        for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? " :--- |" : " ---: |");
        out << '\n';
        for (const auto& r : rows) line(r);
        if (!notes.empty()) out << '\n';
        for (const auto& n : notes) out << "_" << n << "_\n";
        break;
      }
      case ReportFormat::text: {
        std::vector<std::size_t> width(header.size(), 0);
        for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
        for (const auto& r : rows)
          for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        auto line = [&](const std::vector<std::string>& cells) {
          std::string s;
          for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) s += "  ";
            const auto pad = std::string(width[i] - cells[i].size(), ' ');
            s += i == 0 ? cells[i] + pad : pad + cells[i];
          }
          s.erase(s.find_last_not_of(' ') + 1);
          out << s << '\n';
        };
        std::size_t total = 0;
        for (auto w : width) total += w;
        total += 2 * (width.empty() ? 0 : width.size() - 1);
        const std::string rule(total, '-');
        line(header);
        out << rule << '\n';
        for (std::size_t k = 0; k < rows.size(); ++k) {
          if (std::ranges::find(rule_before, k) != rule_before.end()) out << rule << '\n';
          line(rows[k]);
        }
        for (const auto& n : notes) out << n << '\n';
        break;
      }
    }
    return out.str();
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Offset table

/// One OffsetResult per partition; nullopt marks an empty partition ("n/a").
struct OffsetTableInput {
  std::optional<OffsetResult> whole, correct, wrong;
};

inline std::string render_offset_table(const OffsetTableInput& in, ReportFormat f) {
  const std::optional<OffsetResult>* parts[] = {&in.whole, &in.correct, &in.wrong};
  const char* names[] = {"Whole", "Correct", "Wrong"};

  std::vector<MetricId> metrics;
  bool have = false;
  for (const auto* p : parts) {
    if (!*p) continue;
    std::vector<MetricId> ms;
    for (const auto& r : (*p)->rows) ms.push_back(r.metric);
    if (!have) {
      metrics = ms;
      have = true;
    } else if (ms != metrics) {
      throw DataError("offset table partitions have different metric sets");
    }
  }
  if (!have) throw DataError("offset table has no populated partition");

  const bool csv = f == ReportFormat::csv;
  detail::Grid g;
  g.header = {"Metric"};
  for (const char* n : names) {
    g.header.push_back(std::string(n) + (csv ? "_value" : " Value"));
    g.header.push_back(std::string(n) + (csv ? "_offset" : " Offset"));
    if (csv) g.header.push_back(std::string(n) + "_flag");
  }

  // per-partition flags on offsets (lower is better)
  std::vector<std::vector<Flag>> flags;
  for (const auto* p : parts) {
    std::vector<std::optional<double>> col;
    if (*p) {
      for (const auto& r : (*p)->rows) col.push_back(r.offset);
    } else {
      col.assign(metrics.size(), std::nullopt);
    }
    flags.push_back(detail::flag_extremes(col, true));
  }

  std::vector<std::string> sc_row{"SC"};
  for (const auto* p : parts) {
    sc_row.push_back(*p ? fmt3((*p)->sc_mean) : "n/a");
    sc_row.push_back("-");
    if (csv) sc_row.push_back("");
  }
  g.rows.push_back(sc_row);

  for (std::size_t k = 0; k < metrics.size(); ++k) {
    std::vector<std::string> row{std::string(metric_name(metrics[k]))};
    for (std::size_t pi = 0; pi < 3; ++pi) {
      const auto& p = *parts[pi];
      if (!p) {
        row.insert(row.end(), {"n/a", "n/a"});
        if (csv) row.push_back("");
        continue;
      }
      const auto& r = p->rows[k];
      const Flag fl = flags[pi][k];
      if (csv) {
        row.insert(row.end(), {fmt3(r.mean_value), fmt3(r.offset), std::string(detail::flag_name(fl))});
      } else {
        row.push_back(fmt3(r.mean_value));
        row.push_back(detail::decorate(fmt3(r.offset), fl));
      }
    }
    g.rows.push_back(std::move(row));
  }

  std::vector<std::string> avg{"Average"};
  for (const auto* p : parts) {
    if (!*p) {
      avg.insert(avg.end(), {"n/a", "n/a"});
    } else {
      double sv = 0, so = 0;
      for (const auto& r : (*p)->rows) {
        sv += r.mean_value;
        so += r.offset;
      }
      const double n = static_cast<double>((*p)->rows.size());
      avg.push_back(fmt3(sv / n));
      avg.push_back(fmt3(so / n));
    }
    if (csv) avg.push_back("");
  }
  g.rule_before = {1, g.rows.size()};
  g.rows.push_back(std::move(avg));
  return g.render(f);
}

// ---------------------------------------------------------------------------
// Correlation table

inline std::string render_correlation_table(const std::vector<CorrelationRow>& rows, ReportFormat f) {
  const bool csv = f == ReportFormat::csv;
  detail::Grid g;
  g.header = csv ? std::vector<std::string>{"Metric", "pearson_r", "pearson_flag", "kendall_tau", "kendall_flag", "n"}
                 : std::vector<std::string>{"Metric", "Pearson r", "Kendall tau", "n"};
  std::vector<std::optional<double>> rs, taus;
  for (const auto& r : rows) {
    rs.push_back(r.pearson_r);
    taus.push_back(r.kendall_tau);
  }
  const auto rflags = detail::flag_extremes(rs, false);
  const auto tflags = detail::flag_extremes(taus, false);
  auto cell = [](const std::optional<double>& v) { return v ? fmt3(*v) : std::string("undef"); };

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (csv) {
      g.rows.push_back({std::string(metric_name(r.metric)), cell(r.pearson_r), std::string(detail::flag_name(rflags[k])),
                        cell(r.kendall_tau), std::string(detail::flag_name(tflags[k])), std::to_string(r.n)});
    } else {
      g.rows.push_back({std::string(metric_name(r.metric)), detail::decorate(cell(r.pearson_r), rflags[k]),
                        detail::decorate(cell(r.kendall_tau), tflags[k]), std::to_string(r.n)});
    }
  }

  auto average = [](const std::vector<std::optional<double>>& v, std::size_t& excluded) -> std::optional<double> {
    double sum = 0;
    std::size_t n = 0;
    excluded = 0;
    for (const auto& x : v) {
      if (x) {
        sum += *x;
        ++n;
      } else {
        ++excluded;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  std::size_t ex_r = 0, ex_t = 0;
  const auto avg_r = average(rs, ex_r);
  const auto avg_t = average(taus, ex_t);
  g.rule_before = {g.rows.size()};
  if (csv) g.rows.push_back({"Average", cell(avg_r), "", cell(avg_t), "", ""});
  else g.rows.push_back({"Average", cell(avg_r), cell(avg_t), ""});
  if (ex_r || ex_t) {
    g.notes.push_back("Average excludes " + std::to_string(ex_r) + " undefined Pearson and " + std::to_string(ex_t) +
                      " undefined Kendall entries");
  }
  return g.render(f);
}

// ---------------------------------------------------------------------------
// Boxplot data

struct BoxplotData {
  std::string stats_csv;   // metric,min,q1,median,q3,max,mean,std
  std::string marker_csv;  // one row: the SC reference marker
};

/// `means` are the per-metric corpus means; the first row summarizes their
/// distribution (one box per corpus). When `per_sample` is given, one extra row
/// per metric summarizes that metric's per-sample scores.
inline BoxplotData render_boxplot_data(const std::vector<std::pair<MetricId, double>>& means, double sc_mean,
                                       const ScoreTable* per_sample = nullptr) {
  if (means.empty()) throw DataError("boxplot data needs at least one metric mean");
  std::ostringstream out;
  out << "metric,min,q1,median,q3,max,mean,std\n";
  auto row = [&](std::string_view label, const DescriptiveStats& d) {
    out << label << ',' << fmt3(d.min) << ',' << fmt3(d.q1) << ',' << fmt3(d.median) << ',' << fmt3(d.q3) << ','
        << fmt3(d.max) << ',' << fmt3(d.mean) << ',' << fmt3(d.std) << '\n';
  };
  std::vector<double> values;
  for (const auto& [m, v] : means) values.push_back(v);
  row("metric-means", describe(values));
  if (per_sample) {
    for (const auto& [m, unused] : means) {
      std::vector<double> xs;
      for (const auto& [id, mv] : *per_sample) {
        if (auto it = mv.find(m); it != mv.end()) xs.push_back(it->second);
      }
      if (!xs.empty()) row(metric_name(m), describe(xs));
    }
  }
  BoxplotData d;
  d.stats_csv = out.str();
  d.marker_csv = "marker,value\nSC," + fmt3(sc_mean) + "\n";
  return d;
}

}  // namespace evalkit
