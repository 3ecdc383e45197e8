#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "evalkit/corpus.hpp"
#include "evalkit/error.hpp"

using namespace evalkit;

namespace {

Corpus make_corpus(std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    c.samples.push_back({"s" + std::to_string(i), "intent", "ref", "pred", static_cast<int>(i % 2), Language::other});
  }
  return c;
}

std::set<std::string> ids(const Corpus& c) {
  std::set<std::string> out;
  for (const auto& s : c.samples) out.insert(s.id);
  return out;
}

}  // namespace

TEST(Jsonl, WellFormedThreeRecords) {
  std::istringstream in(
      R"({"id":"a","intent":"i","reference":"mov EDX, EAX","prediction":"push EAX\npop EDX","sc":1,"language":"assembly"})"
      "\n"
      R"j({"id":"b","intent":"i","reference":"break","prediction":"sys.exit()","sc":0,"language":"python-like"})j"
      "\n\n"
      R"({"id":"c","reference":"x","language":"other"})"
      "\n");
  const auto c = parse_jsonl_corpus(in);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.samples[0].prediction, "push EAX\npop EDX");
  EXPECT_EQ(c.samples[0].sc, 1);
  EXPECT_EQ(c.samples[1].language, Language::python_like);
  EXPECT_FALSE(c.samples[2].sc);
  EXPECT_EQ(c.samples[2].prediction, "");
  EXPECT_EQ(c.find("b")->reference, "break");
  EXPECT_EQ(c.find("zz"), nullptr);
}

TEST(Jsonl, InvalidScRejected) {
  std::istringstream in(R"({"id":"a","reference":"x","language":"other","sc":2})");
  try {
    parse_jsonl_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("invalid sc"), std::string::npos);
  }
}

TEST(Jsonl, DuplicateIdNamed) {
  std::istringstream in(R"({"id":"s1","reference":"x","language":"other"})"
                        "\n"
                        R"({"id":"s1","reference":"y","language":"other"})");
  try {
    parse_jsonl_corpus(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("\"s1\""), std::string::npos);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
  }
}

TEST(Jsonl, ParseErrorCarriesLineNumber) {
  std::istringstream in(R"({"id":"a","reference":"x","language":"other"})"
                        "\n{not json\n");
  try {
    parse_jsonl_corpus(in, "data.jsonl");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("data.jsonl:2"), std::string::npos);
  }
}

TEST(Jsonl, MissingOrWrongFields) {
  std::istringstream no_ref(R"({"id":"a","language":"other"})");
  EXPECT_THROW(parse_jsonl_corpus(no_ref), DataError);
  std::istringstream bad_lang(R"({"id":"a","reference":"x","language":"cobol"})");
  EXPECT_THROW(parse_jsonl_corpus(bad_lang), DataError);
  std::istringstream sc_string(R"({"id":"a","reference":"x","language":"other","sc":"1"})");
  EXPECT_THROW(parse_jsonl_corpus(sc_string), DataError);
}

TEST(Jsonl, WriteThenReadRoundTrips) {
  Corpus c = make_corpus(5);
  c.samples[1].sc.reset();
  c.samples[2].prediction = "line1\nline2, \"quoted\"";
  std::stringstream buf;
  write_jsonl_corpus(buf, c);
  const auto back = parse_jsonl_corpus(buf);
  EXPECT_EQ(back.samples, c.samples);
}

TEST(Csv, QuotedFieldsAndOptionalSc) {
  std::istringstream in(
      "id,intent,reference,prediction,sc,language\n"
      "a,copy,\"mov EDX, EAX\",\"push EAX\npop EDX\",1,assembly\n"
      "b,,\"say \"\"hi\"\"\",x,,python-like\n");
  const auto c = parse_csv_corpus(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.samples[0].reference, "mov EDX, EAX");
  EXPECT_EQ(c.samples[0].prediction, "push EAX\npop EDX");
  EXPECT_EQ(c.samples[1].reference, "say \"hi\"");
  EXPECT_FALSE(c.samples[1].sc);
}

TEST(Csv, NoScColumnMeansUnlabeled) {
  std::istringstream in("id,reference,prediction,language\na,x,y,other\n");
  const auto c = parse_csv_corpus(in);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_FALSE(c.samples[0].sc);
}

TEST(Csv, Errors) {
  std::istringstream missing_col("id,prediction\na,b\n");
  EXPECT_THROW(parse_csv_corpus(missing_col), DataError);
  std::istringstream bad_sc("id,reference,sc,language\na,x,yes,other\n");
  EXPECT_THROW(parse_csv_corpus(bad_sc), DataError);
  std::istringstream ragged("id,reference,language\na,x\n");
  EXPECT_THROW(parse_csv_corpus(ragged), DataError);
}

TEST(LoadCorpus, MissingFile) { EXPECT_THROW(load_corpus("/nonexistent/x.jsonl", CorpusFormat::jsonl), DataError); }

TEST(Split, TenSamplesSizes) {
  const auto s = split_corpus(make_corpus(10), {0.8, 0.1, 0.1, 7});
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.valid.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.test.provenance.at("split"), "test");
}

TEST(Split, DeterministicForSeed) {
  const auto c = make_corpus(50);
  const auto a = split_corpus(c, {0.8, 0.1, 0.1, 42});
  const auto b = split_corpus(c, {0.8, 0.1, 0.1, 42});
  EXPECT_EQ(a.train.samples, b.train.samples);
  EXPECT_EQ(a.valid.samples, b.valid.samples);
  EXPECT_EQ(a.test.samples, b.test.samples);
  const auto other = split_corpus(c, {0.8, 0.1, 0.1, 43});
  EXPECT_NE(a.test.samples, other.test.samples);
}

TEST(Split, PartitionPropertyOnRandomSizes) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<std::size_t> size(10, 1000);
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = size(rng);
    const auto c = make_corpus(n);
    const auto s = split_corpus(c, {0.8, 0.1, 0.1, rng()});
    EXPECT_EQ(s.train.size() + s.valid.size() + s.test.size(), n);
    auto all = ids(s.train);
    for (const auto* part : {&s.valid, &s.test}) {
      for (const auto& id : ids(*part)) EXPECT_TRUE(all.insert(id).second) << "duplicate " << id;
    }
    EXPECT_EQ(all, ids(c));
    EXPECT_EQ(s.valid.size(), n / 10);
    EXPECT_EQ(s.test.size(), n / 10);
  }
}

TEST(Split, SmallCorporaWithZeroFractions) {
  for (std::size_t n = 3; n < 10; ++n) {
    const auto s = split_corpus(make_corpus(n), {1.0, 0.0, 0.0, 3});
    EXPECT_EQ(s.train.size(), n);
  }
  const auto s = split_corpus(make_corpus(3), {1.0 / 3, 1.0 / 3, 1.0 / 3, 3});
  EXPECT_EQ(s.train.size() + s.valid.size() + s.test.size(), 3u);
}

TEST(Split, Errors) {
  EXPECT_THROW(split_corpus(make_corpus(2), {}), DataError);
  EXPECT_THROW(split_corpus(make_corpus(5), {0.8, 0.1, 0.1, 0}), DataError);
  EXPECT_THROW(split_corpus(make_corpus(10), {0.8, 0.1, 0.2, 0}), ConfigError);
  EXPECT_THROW(split_corpus(make_corpus(10), {1.2, -0.1, -0.1, 0}), ConfigError);
}

TEST(Results, EmptyRowsHeaderOnly) {
  std::ostringstream out;
  write_results(out, {}, all_metrics());
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_TRUE(text.starts_with("id,CA,ROUGE-1-P,"));
  EXPECT_TRUE(text.ends_with(",EM,METEOR,ED\n"));
}

TEST(Results, TwoRowsTwentyFourColumns) {
  std::vector<ResultRow> rows;
  for (auto id : {"a", "b"}) {
    ResultRow r{id, {}};
    for (auto m : all_metrics()) r.scores[m] = 0.5;
    rows.push_back(r);
  }
  std::ostringstream out;
  write_results(out, rows, all_metrics());
  std::istringstream lines(out.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 23);
    ++n;
  }
  EXPECT_EQ(n, 3);
}

TEST(Results, FixedFormatting) {
  EXPECT_EQ(format_fixed(1.0 / 3.0, 6), "0.333333");
  EXPECT_EQ(format_fixed(1e-9, 6), "0.000000");
  EXPECT_EQ(format_fixed(-1e-9, 6), "0.000000");
  EXPECT_EQ(format_fixed(-0.0, 3), "0.000");
  EXPECT_EQ(format_fixed(1.0, 6), "1.000000");
}

TEST(Results, RoundTripIsExactAtFilePrecision) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<ResultRow> rows;
    for (int i = 0; i < 20; ++i) {
      ResultRow r{"id," + std::to_string(i), {}};
      for (auto m : {MetricId::BLEU_1, MetricId::EM, MetricId::ED}) r.scores[m] = u(rng);
      rows.push_back(r);
    }
    std::stringstream first;
    write_results(first, rows);
    const auto table = read_results(first);
    ASSERT_EQ(table.rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(table.rows[i].id, rows[i].id);
      for (const auto& [m, v] : rows[i].scores) {
        EXPECT_EQ(table.rows[i].scores.at(m), std::stod(format_fixed(v, 6)));
      }
    }
    // a table read from a file writes back to the identical bytes and values
    std::stringstream second;
    write_results(second, table.rows, table.metrics);
    EXPECT_EQ(second.str(), first.str());
    std::stringstream again(second.str());
    EXPECT_EQ(read_results(again).rows, table.rows);
  }
}

TEST(Results, HeterogeneousRowsRejected) {
  std::vector<ResultRow> rows{{"a", {{MetricId::EM, 1.0}}}, {"b", {{MetricId::ED, 1.0}}}};
  std::ostringstream out;
  EXPECT_THROW(write_results(out, rows), DataError);
}

TEST(Results, ReadErrors) {
  std::istringstream no_header("a,1\n");
  EXPECT_THROW(read_results(no_header), DataError);
  std::istringstream bad_metric("id,FOO\na,1\n");
  EXPECT_THROW(read_results(bad_metric), DataError);
  std::istringstream bad_number("id,EM\na,one\n");
  EXPECT_THROW(read_results(bad_number), DataError);
}
