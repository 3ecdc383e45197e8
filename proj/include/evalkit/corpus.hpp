#pragma once

// Evaluation records, corpus I/O (JSONL, CSV), train/valid/test splitting and
// the per-sample results table.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/error.hpp"
#include "evalkit/metrics.hpp"

namespace evalkit {

enum class Language { assembly, python_like, other };

inline std::string_view to_string(Language l) {
  switch (l) {
    case Language::assembly: return "assembly";
    case Language::python_like: return "python-like";
    case Language::other: return "other";
  }
  return "other";
}

inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "assembly") return Language::assembly;
  if (s == "python-like") return Language::python_like;
  if (s == "other") return Language::other;
  return std::nullopt;
}

struct Sample {
  std::string id;
  std::string intent;
  std::string reference;
  std::string prediction;
  std::optional<int> sc;  // human semantic-correctness label, 0 or 1
  Language language = Language::other;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Corpus {
  std::vector<Sample> samples;
  std::map<std::string, std::string> provenance;

  std::size_t size() const noexcept { return samples.size(); }

  const Sample* find(std::string_view id) const {
    auto it = std::ranges::find(samples, id, &Sample::id);
    return it == samples.end() ? nullptr : &*it;
  }
};

enum class CorpusFormat { jsonl, csv };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  if (s == "jsonl") return CorpusFormat::jsonl;
  if (s == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format '" + std::string(s) + "'");
}

namespace detail {

inline void validate_sample(const Sample& s, std::set<std::string>& seen, const std::string& where) {
  if (s.id.empty()) throw DataError(where + ": empty id");
  if (!seen.insert(s.id).second) throw DataError(where + ": duplicate id \"" + s.id + "\"");
  if (s.sc && *s.sc != 0 && *s.sc != 1)
    throw DataError(where + ": invalid sc " + std::to_string(*s.sc) + " for id \"" + s.id + "\"");
}

inline Language require_language(std::string_view s, const std::string& where) {
  auto l = parse_language(s);
  if (!l) throw DataError(where + ": unknown language \"" + std::string(s) + "\"");
  return *l;
}

inline Sample sample_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw DataError(where + ": record is not an object");
  auto str = [&](const char* key, bool required) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw DataError(where + ": missing field \"" + key + "\"");
      return {};
    }
    if (!it->is_string()) throw DataError(where + ": field \"" + key + "\" must be a string");
    return it->get<std::string>();
  };
  Sample s;
  s.id = str("id", true);
  s.intent = str("intent", false);
  s.reference = str("reference", true);
  s.prediction = str("prediction", false);
  s.language = require_language(str("language", true), where);
  if (auto it = j.find("sc"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw DataError(where + ": invalid sc for id \"" + s.id + "\"");
    s.sc = it->get<int>();
  }
  return s;
}

// RFC 4180 style record reader: quoted fields may hold commas, quotes and newlines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& fields) {
    fields.clear();
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    record_line_ = line_ + 1;
    std::string field;
    bool quoted = false, field_started = false;
    for (int ch; (ch = in_.get()) != std::char_traits<char>::eof();) {
      const char c = static_cast<char>(ch);
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            field.push_back('"');
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && !field_started) {
        quoted = true;
        field_started = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
      } else if (c == '\n') {
        ++line_;
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(c);
        field_started = true;
      }
    }
    if (quoted) throw DataError("line " + std::to_string(record_line_) + ": unterminated quoted field");
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(std::move(field));
    return true;
  }

  int record_line() const { return record_line_; }

 private:
  std::istream& in_;
  int line_ = 0;
  int record_line_ = 0;
};

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline Corpus parse_jsonl_corpus(std::istream& in, const std::string& source = "<stream>") {
  Corpus c;
  c.provenance["source"] = source;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": parse error: " + e.what());
    }
    auto s = detail::sample_from_json(j, where);
    detail::validate_sample(s, seen, where);
    c.samples.push_back(std::move(s));
  }
  return c;
}

inline Corpus parse_csv_corpus(std::istream& in, const std::string& source = "<stream>") {
  Corpus c;
  c.provenance["source"] = source;
  detail::CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) return c;
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (auto key : {"id", "reference", "language"}) {
    if (!col.contains(key)) throw DataError(source + ":1: missing column \"" + std::string(key) + "\"");
  }
  std::set<std::string> seen;
  std::vector<std::string> row;
  while (reader.next(row)) {
    const std::string where = source + ":" + std::to_string(reader.record_line());
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    auto get = [&](const char* key) -> std::string {
      auto it = col.find(key);
      return it == col.end() ? std::string() : row[it->second];
    };
    Sample s;
    s.id = get("id");
    s.intent = get("intent");
    s.reference = get("reference");
    s.prediction = get("prediction");
    s.language = detail::require_language(get("language"), where);
    if (auto sc = get("sc"); !sc.empty()) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(sc.data(), sc.data() + sc.size(), v);
      if (ec != std::errc() || ptr != sc.data() + sc.size()) throw DataError(where + ": invalid sc \"" + sc + "\"");
      s.sc = v;
    }
    detail::validate_sample(s, seen, where);
    c.samples.push_back(std::move(s));
  }
  return c;
}

inline Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus '" + path + "'");
  return format == CorpusFormat::jsonl ? parse_jsonl_corpus(in, path) : parse_csv_corpus(in, path);
}

inline nlohmann::json sample_to_json(const Sample& s) {
  nlohmann::json j = nlohmann::json::object();
  j["id"] = s.id;
  j["intent"] = s.intent;
  j["reference"] = s.reference;
  j["prediction"] = s.prediction;
  if (s.sc) j["sc"] = *s.sc;
  j["language"] = to_string(s.language);
  return j;
}

inline void write_jsonl_corpus(std::ostream& out, const Corpus& c) {
  for (const auto& s : c.samples) out << sample_to_json(s).dump() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_jsonl_corpus(out, c);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train_frac = 0.8;
  double valid_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_frac < 0 || valid_frac < 0 || test_frac < 0) throw ConfigError("split fractions must be nonnegative");
    if (std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
};

struct CorpusSplit {
  Corpus train, valid, test;
};

/// Seeded shuffle, then floor-sized valid/test slices; the remainder goes to train.
inline CorpusSplit split_corpus(const Corpus& c, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = c.size();
  if (n < 3) throw DataError("corpus too small to split (" + std::to_string(n) + " samples)");
  const auto n_valid = static_cast<std::size_t>(std::floor(spec.valid_frac * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test_frac * static_cast<double>(n) + 1e-9));
  if ((spec.valid_frac > 0 && n_valid == 0) || (spec.test_frac > 0 && n_test == 0))
    throw DataError("corpus of " + std::to_string(n) + " samples is too small for the requested fractions");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with a fixed engine so the permutation is portable
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  CorpusSplit out;
  for (auto* part : {&out.train, &out.valid, &out.test}) part->provenance = c.provenance;
  out.train.provenance["split"] = "train";
  out.valid.provenance["split"] = "valid";
  out.test.provenance["split"] = "test";
  for (std::size_t k = 0; k < n; ++k) {
    const auto& s = c.samples[order[k]];
    if (k < n_valid) out.valid.samples.push_back(s);
    else if (k < n_valid + n_test) out.test.samples.push_back(s);
    else out.train.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results table

struct ResultRow {
  std::string id;
  MetricVector scores;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

/// Fixed-point rendering used by every numeric output: no exponent, dot separator.
inline std::string format_fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.starts_with("-") && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows,
                          const std::vector<MetricId>& metrics) {
  out << "id";
  for (auto m : metrics) out << ',' << metric_name(m);
  out << '\n';
  for (const auto& row : rows) {
    if (row.scores.size() != metrics.size()) throw DataError("heterogeneous metric sets in row \"" + row.id + "\"");
    out << detail::csv_escape(row.id);
    for (auto m : metrics) {
      auto it = row.scores.find(m);
      if (it == row.scores.end()) throw DataError("heterogeneous metric sets in row \"" + row.id + "\"");
      out << ',' << format_fixed(it->second, 6);
    }
    out << '\n';
  }
}

/// Writes rows using the metric set of the first row (all rows must match it).
inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  std::vector<MetricId> metrics;
  if (!rows.empty()) {
    for (const auto& [m, v] : rows.front().scores) metrics.push_back(m);
  }
  write_results(out, rows, metrics);
}

inline void write_results(const std::string& path, const std::vector<ResultRow>& rows,
                          const std::vector<MetricId>& metrics) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write results file '" + path + "'");
  write_results(out, rows, metrics);
  if (!out) throw DataError("I/O error writing '" + path + "'");
}

struct ResultTable {
  std::vector<MetricId> metrics;
  std::vector<ResultRow> rows;
};

inline ResultTable read_results(std::istream& in, const std::string& source = "<stream>") {
  ResultTable t;
  detail::CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields.empty() || fields[0] != "id")
    throw DataError(source + ": missing results header");
  for (std::size_t i = 1; i < fields.size(); ++i) {
    auto m = parse_metric(fields[i]);
    if (!m) throw DataError(source + ": unknown metric column \"" + fields[i] + "\"");
    t.metrics.push_back(*m);
  }
  while (reader.next(fields)) {
    const std::string where = source + ":" + std::to_string(reader.record_line());
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != t.metrics.size() + 1) throw DataError(where + ": wrong number of columns");
    ResultRow row{fields[0], {}};
    for (std::size_t i = 0; i < t.metrics.size(); ++i) {
      const auto& f = fields[i + 1];
      double v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw DataError(where + ": bad number \"" + f + "\"");
      row.scores[t.metrics[i]] = v;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline ResultTable read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open results file '" + path + "'");
  return read_results(in, path);
}

}  // namespace evalkit
