#pragma once

// Command implementations behind the `evalkit` executable. Each command takes
// a RunConfig and returns a process exit status:
// 0 success, 1 configuration error, 2 data error, 3 checker infrastructure error.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/evalkit.hpp"

namespace evalkit {

struct RunConfig {
  std::string corpus;
  CorpusFormat format = CorpusFormat::jsonl;
  std::string metrics_config;  // empty: built-in defaults
  std::string checker = "auto";
  int checker_timeout_ms = 10'000;
  std::string out = ".";
  std::string results;  // analyze input; empty: <out>/results.csv
  unsigned jobs = 1;
  std::uint64_t seed = 0;
  std::string partition = "all";
  // preprocess
  std::string rules;
  std::string sidecar;
  bool destandardize = false;
  bool filter_stopwords = false;
  // split
  std::vector<double> fractions{0.8, 0.1, 0.1};
};

namespace detail {

inline std::filesystem::path prepare_out_dir(const std::string& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out)) throw ConfigError("output directory '" + out + "' is not usable");
  return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot write '" + p.string() + "'");
  f << contents;
  if (!f) throw DataError("I/O error writing '" + p.string() + "'");
}

inline void apply_checker_selection(MetricConfig& cfg, const RunConfig& run) {
  const auto& sel = run.checker;
  if (sel == "auto") return;
  if (sel == "none") {
    cfg.disable(MetricId::CA);
    return;
  }
  SyntaxChecker chk;
  if (sel == "assembly") chk = SyntaxChecker::assembly();
  else if (sel == "python") chk = SyntaxChecker::python();
  else if (sel.starts_with("cmd:")) {
    if (run.checker_timeout_ms <= 0) throw ConfigError("checker timeout must be positive");
    chk = SyntaxChecker::external("cmd", sel.substr(4), std::chrono::milliseconds(run.checker_timeout_ms));
  } else {
    throw ConfigError("unknown checker selection '" + sel + "' (auto, none, assembly, python, cmd:<template>)");
  }
  cfg.checkers.clear();
  cfg.default_checker = chk;
}

inline nlohmann::json tokenizer_json(const TokenizerConfig& t) {
  return {{"mode", to_string(t.mode)}, {"newline_is_token", t.newline_is_token}, {"lowercase", t.lowercase}};
}

inline nlohmann::json config_metadata(const MetricConfig& cfg) {
  nlohmann::json j;
  for (const auto& [lang, t] : cfg.tokenizers) j["tokenizers"][std::string(to_string(lang))] = tokenizer_json(t);
  j["meteor_tokenizer"] = cfg.meteor_tokenizer ? tokenizer_json(*cfg.meteor_tokenizer) : nlohmann::json(nullptr);
  j["bleu"] = {{"smoothing", to_string(cfg.bleu.smoothing)}, {"epsilon", cfg.bleu.epsilon}};
  j["meteor"] = {{"alpha", cfg.meteor.alpha}, {"beta", cfg.meteor.beta}, {"gamma", cfg.meteor.gamma}};
  j["char_newline"] = cfg.char_newline == CharNewline::escaped ? "escaped" : "raw";
  for (auto m : cfg.metrics) j["metrics"].push_back(metric_name(m));
  for (const auto& [lang, c] : cfg.checkers) j["checkers"][std::string(to_string(lang))] = c.name;
  if (cfg.default_checker) j["checkers"]["*"] = cfg.default_checker->name;
  return j;
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace detail

/// Scores every sample of `corpus` with `jobs` worker threads. Rows come back
/// sorted by sample id whatever the completion order.
inline std::vector<ResultRow> evaluate_corpus(const Corpus& corpus, const MetricConfig& cfg, unsigned jobs) {
  const std::size_t n = corpus.size();
  std::vector<ResultRow> rows(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const auto& s = corpus.samples[i];
      try {
        rows[i] = {s.id, evaluate_sample(s, cfg)};
      } catch (const CheckerError& e) {
        errors[i] = std::make_exception_ptr(CheckerError("sample \"" + s.id + "\": " + e.what()));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::ranges::sort(rows, {}, &ResultRow::id);
  return rows;
}

/// eval: writes <out>/results.csv and <out>/results.meta.json.
inline int cmd_eval(const RunConfig& run, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    MetricConfig cfg = run.metrics_config.empty() ? MetricConfig{} : load_metric_config(run.metrics_config);
    detail::apply_checker_selection(cfg, run);
    const auto out = detail::prepare_out_dir(run.out);
    const Corpus corpus = load_corpus(run.corpus, run.format);
    const auto rows = evaluate_corpus(corpus, cfg, run.jobs);
    write_results((out / "results.csv").string(), rows, cfg.metrics);
    auto meta = detail::config_metadata(cfg);
    meta["samples"] = rows.size();
    detail::write_file(out / "results.meta.json", meta.dump(2) + "\n");
    log << "evaluated " << rows.size() << " samples -> " << (out / "results.csv").string() << '\n';
    return 0;
  });
}

/// analyze: offset tables, correlation table and boxplot data from a results
/// file plus the labeled corpus.
inline int cmd_analyze(const RunConfig& run, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    if (run.partition != "all" && run.partition != "whole" && run.partition != "correct" && run.partition != "wrong")
      throw ConfigError("--partition must be all, whole, correct or wrong");
    const auto out = detail::prepare_out_dir(run.out);
    const Corpus corpus = load_corpus(run.corpus, run.format);
    const std::string results_path = run.results.empty() ? (out / "results.csv").string() : run.results;
    const auto table = read_results(results_path);

    ScoreTable scores;
    for (const auto& row : table.rows) {
      if (!corpus.find(row.id)) throw DataError("results row \"" + row.id + "\" is not in the corpus");
      scores[row.id] = row.scores;
    }
    const auto parts = partition_by_sc(corpus);
    if (parts.unlabeled > 0) log << "note: " << parts.unlabeled << " unlabeled samples skipped\n";
    for (const auto& id : parts.whole.ids) {
      if (!scores.contains(id)) throw DataError("labeled sample \"" + id + "\" has no results row");
    }

    auto wanted = [&](PartitionKind k) { return run.partition == "all" || run.partition == to_string(k); };
    OffsetTableInput input;
    auto compute = [&](PartitionKind k) -> std::optional<OffsetResult> {
      const auto& p = parts.get(k);
      if (!wanted(k) || p.ids.empty()) return std::nullopt;
      return offsets(corpus, scores, p, table.metrics);
    };
    input.whole = compute(PartitionKind::whole);
    input.correct = compute(PartitionKind::correct);
    input.wrong = compute(PartitionKind::wrong);
    for (auto f : {ReportFormat::text, ReportFormat::csv, ReportFormat::markdown}) {
      detail::write_file(out / ("offsets." + std::string(extension(f))), render_offset_table(input, f));
    }

    const auto corr = correlate(corpus, scores, table.metrics);
    for (auto f : {ReportFormat::text, ReportFormat::csv, ReportFormat::markdown}) {
      detail::write_file(out / ("correlation." + std::string(extension(f))), render_correlation_table(corr, f));
    }

    const auto whole = offsets(corpus, scores, parts.whole, table.metrics);
    std::vector<std::pair<MetricId, double>> means;
    for (const auto& r : whole.rows) means.emplace_back(r.metric, r.mean_value);
    ScoreTable labeled_scores;
    for (const auto& id : parts.whole.ids) labeled_scores[id] = scores.at(id);
    const auto box = render_boxplot_data(means, whole.sc_mean, &labeled_scores);
    detail::write_file(out / "boxplot.csv", box.stats_csv);
    detail::write_file(out / "sc_marker.csv", box.marker_csv);
    log << "analyzed " << parts.whole.ids.size() << " labeled samples -> " << out.string() << '\n';
    return 0;
  });
}

namespace detail {

inline nlohmann::json map_to_json(const StandardizationMap& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) arr.push_back({StandardizationMap::placeholder(i), m.literals()[i]});
  return arr;
}

inline std::map<std::string, StandardizationMap> load_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sidecar '" + path + "'");
  std::map<std::string, StandardizationMap> maps;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      StandardizationMap m;
      std::size_t expect = 0;
      for (const auto& entry : j.at("map")) {
        if (entry.at(0).get<std::string>() != StandardizationMap::placeholder(expect++))
          throw DataError(path + ":" + std::to_string(lineno) + ": placeholders must be consecutive from var0");
        m.add(entry.at(1).get<std::string>());
      }
      maps[j.at("id").get<std::string>()] = std::move(m);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return maps;
}

}  // namespace detail

/// preprocess: standardizes intents (optionally after stopword filtering) and
/// writes the corpus plus a placeholder sidecar; with `destandardize` it
/// inverts a previous run using the sidecar.
inline int cmd_preprocess(const RunConfig& run, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    const auto out = detail::prepare_out_dir(run.out);
    if (run.destandardize) {
      if (run.sidecar.empty()) throw ConfigError("--destandardize needs --sidecar");
      const auto maps = detail::load_sidecar(run.sidecar);
      Corpus corpus = load_corpus(run.corpus, run.format);
      for (auto& s : corpus.samples) {
        auto it = maps.find(s.id);
        if (it == maps.end()) throw DataError("sample \"" + s.id + "\" has no sidecar entry");
        s.intent = destandardize(s.intent, it->second).text;
        auto pred = destandardize(s.prediction, it->second);
        for (const auto& u : pred.unknown_placeholders)
          log << "warning: sample \"" << s.id << "\": unknown placeholder " << u << '\n';
        s.prediction = std::move(pred.text);
      }
      save_corpus((out / "destandardized.jsonl").string(), corpus);
      log << "destandardized " << corpus.size() << " samples\n";
      return 0;
    }

    if (run.rules.empty()) throw ConfigError("preprocess needs --rules");
    const auto rules = load_rules(run.rules);
    std::optional<StopwordList> stop;
    if (run.filter_stopwords) {
      const char* env = std::getenv("EVALKIT_STOPWORDS");
      stop = env && *env ? load_stopwords(env) : default_stopwords();
    }
    Corpus corpus = load_corpus(run.corpus, run.format);
    std::ostringstream sidecar;
    for (auto& s : corpus.samples) {
      std::string intent = s.intent;
      if (stop) {
        const auto kept = filter_stopwords(tokenize(intent, {TokenizerMode::whitespace, false, false}), *stop);
        intent.clear();
        for (const auto& t : kept.tokens) intent += (intent.empty() ? "" : " ") + t;
      }
      auto st = standardize(intent, rules);
      s.intent = std::move(st.text);
      sidecar << nlohmann::json{{"id", s.id}, {"map", detail::map_to_json(st.map)}}.dump() << '\n';
    }
    save_corpus((out / "standardized.jsonl").string(), corpus);
    detail::write_file(out / "standardization.jsonl", sidecar.str());
    log << "standardized " << corpus.size() << " samples\n";
    return 0;
  });
}

/// split: seeded train/valid/test partition written as three JSONL files.
inline int cmd_split(const RunConfig& run, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    if (run.fractions.size() != 3) throw ConfigError("--fractions needs three values");
    SplitSpec spec{run.fractions[0], run.fractions[1], run.fractions[2], run.seed};
    spec.validate();
    const auto out = detail::prepare_out_dir(run.out);
    const auto split = split_corpus(load_corpus(run.corpus, run.format), spec);
    save_corpus((out / "train.jsonl").string(), split.train);
    save_corpus((out / "valid.jsonl").string(), split.valid);
    save_corpus((out / "test.jsonl").string(), split.test);
    log << "split " << split.train.size() << "/" << split.valid.size() << "/" << split.test.size() << '\n';
    return 0;
  });
}

}  // namespace evalkit
