#pragma once

// Metric configuration and the per-sample evaluation that produces a MetricVector.

#include <chrono>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evalkit/checker.hpp"
#include "evalkit/corpus.hpp"
#include "evalkit/metrics.hpp"
#include "evalkit/textprep.hpp"

namespace evalkit {

/// How the character-level metrics (ED) see multi-line snippets.
enum class CharNewline {
  escaped,  // lines joined by a literal " \n ", the corpora's one-line storage form
  raw,      // the snippet as-is, with real newline characters
};

struct MetricConfig {
  std::map<Language, TokenizerConfig> tokenizers{{Language::assembly, TokenizerConfig::code()},
                                                 {Language::python_like, TokenizerConfig::code()},
                                                 {Language::other, TokenizerConfig::code()}};
  // METEOR's own word tokenizer splits punctuation off words.
  std::optional<TokenizerConfig> meteor_tokenizer = TokenizerConfig{TokenizerMode::code_punct, true, false};
  BleuParams bleu;
  MeteorParams meteor;
  CharNewline char_newline = CharNewline::escaped;
  std::vector<MetricId> metrics = all_metrics();
  // CA checker per language; a language without one scores CA through `default_checker`.
  std::map<Language, SyntaxChecker> checkers{{Language::assembly, SyntaxChecker::assembly()},
                                             {Language::python_like, SyntaxChecker::python()}};
  std::optional<SyntaxChecker> default_checker;

  const TokenizerConfig& tokenizer_for(Language l) const {
    static const TokenizerConfig fallback = TokenizerConfig::code();
    auto it = tokenizers.find(l);
    return it == tokenizers.end() ? fallback : it->second;
  }

  const SyntaxChecker* checker_for(Language l) const {
    if (auto it = checkers.find(l); it != checkers.end()) return &it->second;
    return default_checker ? &*default_checker : nullptr;
  }

  bool enabled(MetricId m) const { return std::ranges::find(metrics, m) != metrics.end(); }

  void disable(MetricId m) { std::erase(metrics, m); }
};

namespace detail {

inline TokenizerConfig tokenizer_from_json(const nlohmann::json& j, TokenizerConfig base) {
  if (!j.is_object()) throw ConfigError("tokenizer entry must be an object");
  if (auto it = j.find("mode"); it != j.end()) base.mode = parse_tokenizer_mode(it->get<std::string>());
  if (auto it = j.find("newline_is_token"); it != j.end()) base.newline_is_token = it->get<bool>();
  if (auto it = j.find("lowercase"); it != j.end()) base.lowercase = it->get<bool>();
  return base;
}

}  // namespace detail

/// Reads a metric configuration. Every key is optional; absent keys keep defaults.
///
///   {
///     "tokenizers": {"assembly": {"mode": "whitespace", "newline_is_token": true, "lowercase": false}},
///     "meteor_tokenizer": {"mode": "code-punct"} | null,
///     "bleu": {"smoothing": "none" | "epsilon" | "exponential", "epsilon": 1e-9},
///     "meteor": {"alpha": 0.9, "beta": 3.0, "gamma": 0.5},
///     "char_newline": "escaped" | "raw",
///     "metrics": ["CA", "ROUGE-1-P", ...],
///     "checkers": {"assembly": {"kind": "external", "command": "nasm -f elf32 {file} -o /dev/null", "timeout_ms": 5000}}
///   }
inline MetricConfig parse_metric_config(const nlohmann::json& j) {
  MetricConfig cfg;
  try {
    if (!j.is_object()) throw ConfigError("metric configuration must be a JSON object");
    if (auto it = j.find("tokenizers"); it != j.end()) {
      for (const auto& [lang, tj] : it->items()) {
        auto l = parse_language(lang);
        if (!l) throw ConfigError("unknown language '" + lang + "' in tokenizers");
        cfg.tokenizers[*l] = detail::tokenizer_from_json(tj, cfg.tokenizer_for(*l));
      }
    }
    if (auto it = j.find("meteor_tokenizer"); it != j.end()) {
      if (it->is_null()) cfg.meteor_tokenizer.reset();
      else cfg.meteor_tokenizer = detail::tokenizer_from_json(*it, *cfg.meteor_tokenizer);
    }
    if (auto it = j.find("bleu"); it != j.end()) {
      if (auto s = it->find("smoothing"); s != it->end()) cfg.bleu.smoothing = parse_bleu_smoothing(s->get<std::string>());
      if (auto e = it->find("epsilon"); e != it->end()) cfg.bleu.epsilon = e->get<double>();
      if (!(cfg.bleu.epsilon > 0.0 && cfg.bleu.epsilon < 1.0)) throw ConfigError("BLEU epsilon must be in (0,1)");
    }
    if (auto it = j.find("meteor"); it != j.end()) {
      cfg.meteor.alpha = it->value("alpha", cfg.meteor.alpha);
      cfg.meteor.beta = it->value("beta", cfg.meteor.beta);
      cfg.meteor.gamma = it->value("gamma", cfg.meteor.gamma);
      cfg.meteor.validate();
    }
    if (auto it = j.find("char_newline"); it != j.end()) {
      const auto v = it->get<std::string>();
      if (v == "escaped") cfg.char_newline = CharNewline::escaped;
      else if (v == "raw") cfg.char_newline = CharNewline::raw;
      else throw ConfigError("char_newline must be 'escaped' or 'raw'");
    }
    if (auto it = j.find("metrics"); it != j.end()) {
      cfg.metrics.clear();
      for (const auto& name : *it) {
        auto m = parse_metric(name.get<std::string>());
        if (!m) throw ConfigError("unknown metric '" + name.get<std::string>() + "'");
        if (!cfg.enabled(*m)) cfg.metrics.push_back(*m);
      }
      std::ranges::sort(cfg.metrics);
    }
    if (auto it = j.find("checkers"); it != j.end()) {
      for (const auto& [lang, cj] : it->items()) {
        const auto kind = cj.value("kind", std::string("external"));
        SyntaxChecker chk;
        if (kind == "builtin-assembly") chk = SyntaxChecker::assembly();
        else if (kind == "builtin-python") chk = SyntaxChecker::python();
        else if (kind == "external") {
          if (!cj.contains("command")) throw ConfigError("external checker for '" + lang + "' needs a command");
          chk = SyntaxChecker::external(cj.value("name", lang + "-external"), cj.at("command").get<std::string>(),
                                        std::chrono::milliseconds(cj.value("timeout_ms", 10'000)));
          if (chk.timeout.count() <= 0) throw ConfigError("checker timeout must be positive");
        } else {
          throw ConfigError("unknown checker kind '" + kind + "'");
        }
        if (lang == "*") {
          cfg.default_checker = chk;
        } else {
          auto l = parse_language(lang);
          if (!l) throw ConfigError("unknown language '" + lang + "' in checkers");
          cfg.checkers[*l] = chk;
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metric configuration: ") + e.what());
  }
  return cfg;
}

inline MetricConfig load_metric_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metric configuration '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("metric configuration '" + path + "': " + e.what());
  }
  return parse_metric_config(j);
}

/// Scores one sample under `cfg`. Only checker infrastructure errors escape.
inline MetricVector evaluate_sample(const Sample& s, const MetricConfig& cfg) {
  MetricVector out;
  const auto& tok_cfg = cfg.tokenizer_for(s.language);
  const TokenSeq pred = tokenize(s.prediction, tok_cfg);
  const TokenSeq ref = tokenize(s.reference, tok_cfg);

  for (int n = 1; n <= 4; ++n) {
    if (!cfg.enabled(rouge_metric(n, 0)) && !cfg.enabled(rouge_metric(n, 1)) && !cfg.enabled(rouge_metric(n, 2)))
      continue;
    const auto r = rouge_n(pred, ref, static_cast<std::size_t>(n));
    out[rouge_metric(n, 0)] = r.precision;
    out[rouge_metric(n, 1)] = r.recall;
    out[rouge_metric(n, 2)] = r.f1;
  }
  if (cfg.enabled(MetricId::ROUGE_L_P) || cfg.enabled(MetricId::ROUGE_L_R) || cfg.enabled(MetricId::ROUGE_L_F1)) {
    const auto r = rouge_l(pred, ref);
    out[MetricId::ROUGE_L_P] = r.precision;
    out[MetricId::ROUGE_L_R] = r.recall;
    out[MetricId::ROUGE_L_F1] = r.f1;
  }
  for (int n = 1; n <= 4; ++n) {
    if (cfg.enabled(bleu_metric(n))) out[bleu_metric(n)] = bleu(pred, ref, n, cfg.bleu);
  }
  if (cfg.enabled(MetricId::EM)) out[MetricId::EM] = exact_match(s.prediction, s.reference);
  if (cfg.enabled(MetricId::METEOR)) {
    if (cfg.meteor_tokenizer) {
      out[MetricId::METEOR] =
          meteor(tokenize(s.prediction, *cfg.meteor_tokenizer), tokenize(s.reference, *cfg.meteor_tokenizer), cfg.meteor);
    } else {
      out[MetricId::METEOR] = meteor(pred, ref, cfg.meteor);
    }
  }
  if (cfg.enabled(MetricId::ED)) {
    out[MetricId::ED] = cfg.char_newline == CharNewline::escaped
                            ? edit_distance_norm(flatten_snippet(s.prediction), flatten_snippet(s.reference))
                            : edit_distance_norm(s.prediction, s.reference);
  }
  if (cfg.enabled(MetricId::CA)) {
    const SyntaxChecker* checker = cfg.checker_for(s.language);
    if (!checker) throw CheckerError("no syntax checker configured for language " + std::string(to_string(s.language)));
    out[MetricId::CA] = compilation_accuracy(s.prediction, *checker);
  }

  // drop components of partially enabled families
  std::erase_if(out, [&](const auto& kv) { return !cfg.enabled(kv.first); });
  return out;
}

}  // namespace evalkit
