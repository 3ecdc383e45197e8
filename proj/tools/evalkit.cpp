#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evalkit/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"evalkit: score generated code against references and human labels"};
  app.require_subcommand(1);

  evalkit::RunConfig run;
  std::string format = "jsonl";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--corpus", run.corpus, "Corpus file")->required();
    cmd->add_option("--format", format, "Corpus format")->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_option("--out", run.out, "Output directory");
  };

  auto* eval = app.add_subcommand("eval", "Score every sample and write results.csv");
  add_common(eval);
  eval->add_option("--metrics-config", run.metrics_config, "Metric configuration (JSON)");
  eval->add_option("--checker", run.checker, "auto | none | assembly | python | cmd:<template with {file}>");
  eval->add_option("--checker-timeout-ms", run.checker_timeout_ms, "Timeout for cmd: checkers");
  eval->add_option("--jobs", run.jobs, "Parallel workers")->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "Offset, correlation and boxplot reports");
  add_common(analyze);
  analyze->add_option("--results", run.results, "Results file (default <out>/results.csv)");
  analyze->add_option("--partition", run.partition, "all | whole | correct | wrong");

  auto* preprocess = app.add_subcommand("preprocess", "Standardize intents to var# placeholders, or invert");
  add_common(preprocess);
  preprocess->add_option("--rules", run.rules, "Standardization rules file");
  preprocess->add_flag("--filter-stopwords", run.filter_stopwords, "Drop stopwords from intents first");
  preprocess->add_flag("--destandardize", run.destandardize, "Replace placeholders using --sidecar");
  preprocess->add_option("--sidecar", run.sidecar, "Sidecar written by a previous preprocess run");

  auto* split = app.add_subcommand("split", "Seeded train/valid/test split");
  add_common(split);
  split->add_option("--seed", run.seed, "Shuffle seed");
  split->add_option("--fractions", run.fractions, "Train, valid and test fractions")->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  run.format = evalkit::parse_corpus_format(format);

  if (eval->parsed()) return evalkit::cmd_eval(run);
  if (analyze->parsed()) return evalkit::cmd_analyze(run);
  if (preprocess->parsed()) return evalkit::cmd_preprocess(run);
  if (split->parsed()) return evalkit::cmd_split(run);
  return 1;
}
