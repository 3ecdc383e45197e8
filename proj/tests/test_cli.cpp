// Drives the built evalkit executable end to end.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "evalkit/corpus.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = EVALKIT_CLI_PATH;
const std::string kSamples = EVALKIT_SAMPLES_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("evalkit-cli-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with `args`; stderr lands in `err_`.
  int run(const std::string& args, const std::string& env = "") {
    const auto err_file = dir_ / "stderr.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " >/dev/null 2>" + err_file.string();
    const int status = std::system(cmd.c_str());
    err_ = slurp(err_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
  std::string err_;
};

}  // namespace

TEST_F(Cli, EvalWritesResultsForEverySample) {
  spit(dir_ / "c.jsonl",
       R"({"id":"b","reference":"mov eax, 5","prediction":"mov eax, 5","sc":1,"language":"assembly"})"
       "\n"
       R"j({"id":"a","reference":"break","prediction":"sys.exit()","sc":0,"language":"python-like"})j"
       "\n"
       R"({"id":"c","reference":"x = 1","prediction":"x = 2","language":"other"})"
       "\n");
  ASSERT_EQ(run("eval --corpus " + (dir_ / "c.jsonl").string() + " --out " + (dir_ / "o").string() +
                " --checker python"),
            0)
      << err_;
  const auto table = evalkit::read_results((dir_ / "o" / "results.csv").string());
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.metrics.size(), 23u);
  EXPECT_EQ(table.rows[0].id, "a");  // sorted by id
  EXPECT_EQ(table.rows[1].scores.at(evalkit::MetricId::EM), 1.0);
  EXPECT_TRUE(fs::exists(dir_ / "o" / "results.meta.json"));
}

TEST_F(Cli, InvalidScIsDataErrorCitingId) {
  spit(dir_ / "c.jsonl", R"({"id":"bad-one","reference":"x","prediction":"x","sc":2,"language":"other"})"
                         "\n");
  EXPECT_EQ(run("eval --corpus " + (dir_ / "c.jsonl").string() + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(err_.find("bad-one"), std::string::npos) << err_;
}

TEST_F(Cli, ConfigErrorsExitOne) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  EXPECT_EQ(run("eval --corpus " + corpus + " --out " + dir_.string() + " --checker bogus"), 1);
  spit(dir_ / "m.json", R"({"bleu": {"smoothing": "add-one"}})");
  EXPECT_EQ(run("eval --corpus " + corpus + " --out " + dir_.string() + " --metrics-config " +
                (dir_ / "m.json").string()),
            1);
  EXPECT_EQ(run("eval --out " + dir_.string()), 1);  // missing --corpus
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, MissingCheckerExecutableExitsThree) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  EXPECT_EQ(run("eval --corpus " + corpus + " --out " + dir_.string() +
                " --checker 'cmd:no-such-checker-binary-xyz {file}'"),
            3);
  EXPECT_NE(err_.find("no-such-checker-binary-xyz"), std::string::npos) << err_;
}

TEST_F(Cli, ExternalCheckerAlwaysAccept) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  ASSERT_EQ(run("eval --corpus " + corpus + " --out " + dir_.string() + " --checker 'cmd:true {file}' --jobs 2"), 0)
      << err_;
  const auto table = evalkit::read_results((dir_ / "results.csv").string());
  for (const auto& r : table.rows) EXPECT_EQ(r.scores.at(evalkit::MetricId::CA), 1.0) << r.id;
}

TEST_F(Cli, EvalThenAnalyzeIsDeterministic) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  const std::string cfg = kSamples + "/metrics.json";
  for (const char* sub : {"r1", "r2"}) {
    const auto out = (dir_ / sub).string();
    ASSERT_EQ(run("eval --corpus " + corpus + " --metrics-config " + cfg + " --out " + out + " --jobs 4"), 0) << err_;
    ASSERT_EQ(run("analyze --corpus " + corpus + " --out " + out), 0) << err_;
    EXPECT_NE(err_.find("1 unlabeled samples skipped"), std::string::npos) << err_;
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "r1")) {
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "r2" / e.path().filename())) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 10u);
  const auto offsets = slurp(dir_ / "r1" / "offsets.csv");
  EXPECT_TRUE(offsets.starts_with("Metric,Whole_value,")) << offsets;
  EXPECT_NE(slurp(dir_ / "r1" / "correlation.md").find("| Metric | Pearson r | Kendall tau | n |"), std::string::npos);
}

TEST_F(Cli, IdentityCorpusHasZeroEmOffset) {
  spit(dir_ / "c.jsonl",
       R"({"id":"a","reference":"mov eax, 5","prediction":"mov eax, 5","sc":1,"language":"assembly"})"
       "\n"
       R"({"id":"b","reference":"jmp decode","prediction":"jmp decode","sc":1,"language":"assembly"})"
       "\n");
  const auto c = (dir_ / "c.jsonl").string();
  ASSERT_EQ(run("eval --corpus " + c + " --out " + dir_.string()), 0) << err_;
  ASSERT_EQ(run("analyze --corpus " + c + " --out " + dir_.string() + " --partition whole"), 0) << err_;
  const auto csv = slurp(dir_ / "offsets.csv");
  EXPECT_NE(csv.find("\nEM,1.000,0.000,best,n/a,n/a,,n/a,n/a,\n"), std::string::npos) << csv;
}

TEST_F(Cli, AnalyzeUnlabeledCorpusExitsTwo) {
  spit(dir_ / "c.jsonl", R"({"id":"a","reference":"x","prediction":"x","language":"other"})"
                         "\n");
  const auto c = (dir_ / "c.jsonl").string();
  ASSERT_EQ(run("eval --corpus " + c + " --out " + dir_.string() + " --checker none"), 0) << err_;
  EXPECT_EQ(run("analyze --corpus " + c + " --out " + dir_.string()), 2);
  EXPECT_NE(err_.find("no labeled samples"), std::string::npos) << err_;
}

TEST_F(Cli, PreprocessRoundTrip) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  ASSERT_EQ(run("preprocess --corpus " + corpus + " --rules " + kSamples + "/rules.txt --out " + (dir_ / "std").string()),
            0)
      << err_;
  const auto sidecar = slurp(dir_ / "std" / "standardization.jsonl");
  EXPECT_NE(sidecar.find(R"({"id":"asm-push-hex","map":[["var0","0x68732f2f"],["var1","0x6e69622f"]]})"),
            std::string::npos)
      << sidecar;
  const auto std_corpus = evalkit::load_corpus((dir_ / "std" / "standardized.jsonl").string(), evalkit::CorpusFormat::jsonl);
  EXPECT_EQ(std_corpus.find("asm-push-hex")->intent, "push var0 then push var1");

  ASSERT_EQ(run("preprocess --destandardize --corpus " + (dir_ / "std" / "standardized.jsonl").string() +
                " --sidecar " + (dir_ / "std" / "standardization.jsonl").string() + " --out " + (dir_ / "back").string()),
            0)
      << err_;
  const auto original = evalkit::load_corpus(corpus, evalkit::CorpusFormat::jsonl);
  const auto back = evalkit::load_corpus((dir_ / "back" / "destandardized.jsonl").string(), evalkit::CorpusFormat::jsonl);
  EXPECT_EQ(back.samples, original.samples);
}

TEST_F(Cli, PreprocessStopwordsFromEnvironment) {
  spit(dir_ / "c.jsonl", R"({"id":"a","intent":"jump to the label","reference":"x","language":"other"})"
                         "\n");
  spit(dir_ / "stop.txt", "jump\n");
  spit(dir_ / "rules.txt", "decimal-literal = @builtin\n");
  const std::string args = "preprocess --filter-stopwords --corpus " + (dir_ / "c.jsonl").string() + " --rules " +
                           (dir_ / "rules.txt").string() + " --out " + dir_.string();
  ASSERT_EQ(run(args), 0) << err_;
  EXPECT_EQ(evalkit::load_corpus((dir_ / "standardized.jsonl").string(), evalkit::CorpusFormat::jsonl).samples[0].intent,
            "jump label");
  ASSERT_EQ(run(args, "EVALKIT_STOPWORDS=" + (dir_ / "stop.txt").string()), 0) << err_;
  EXPECT_EQ(evalkit::load_corpus((dir_ / "standardized.jsonl").string(), evalkit::CorpusFormat::jsonl).samples[0].intent,
            "to the label");
}

TEST_F(Cli, PreprocessConfigErrors) {
  const std::string corpus = kSamples + "/fixture.jsonl";
  EXPECT_EQ(run("preprocess --corpus " + corpus + " --rules /nonexistent/rules.txt --out " + dir_.string()), 1);
  spit(dir_ / "bad.txt", "broken = ([a-z\n");
  EXPECT_EQ(run("preprocess --corpus " + corpus + " --rules " + (dir_ / "bad.txt").string() + " --out " + dir_.string()),
            1);
  EXPECT_NE(err_.find("broken"), std::string::npos) << err_;
}

TEST_F(Cli, SplitIsSeededPartition) {
  std::string lines;
  for (int i = 0; i < 20; ++i)
    lines += R"({"id":"s)" + std::to_string(i) + R"(","reference":"x","language":"other"})" + "\n";
  spit(dir_ / "c.jsonl", lines);
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(run("split --corpus " + (dir_ / "c.jsonl").string() + " --seed 7 --out " + (dir_ / sub).string()), 0)
        << err_;
  }
  std::size_t total = 0;
  for (const char* part : {"train.jsonl", "valid.jsonl", "test.jsonl"}) {
    EXPECT_EQ(slurp(dir_ / "a" / part), slurp(dir_ / "b" / part));
    total += evalkit::load_corpus((dir_ / "a" / part).string(), evalkit::CorpusFormat::jsonl).size();
  }
  EXPECT_EQ(total, 20u);
  EXPECT_EQ(evalkit::load_corpus((dir_ / "a" / "test.jsonl").string(), evalkit::CorpusFormat::jsonl).size(), 2u);
  EXPECT_EQ(run("split --corpus " + (dir_ / "c.jsonl").string() + " --fractions 0.5 0.5 0.5 --out " + dir_.string()), 1);
}
