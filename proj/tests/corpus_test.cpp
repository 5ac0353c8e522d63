#include <gtest/gtest.h>

#include "advtext/corpus.hpp"
#include "advtext/error.hpp"
#include "testing/tempdir.hpp"

using namespace advtext;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

const char* kRecord =
    R"({"original":"good movie","label":1,"task":"sentiment","dataset":"sst","perturbed":"g00d movie",)"
    R"("attack":"dwb","model":"bert","success":true,"orig_conf":0.9,"adv_conf":0.4})";

AdversarialPair sample_pair(int i) {
  AdversarialPair p;
  p.original = {"text " + std::to_string(i) + ", with \"quotes\"\nand newline", static_cast<ClassIndex>(i % 3),
                "task" + std::to_string(i), "ds"};
  p.perturbed = "t3xt " + std::to_string(i);
  p.attack_method = "a";
  p.victim_model_id = "m";
  p.success = i % 2 == 0;
  if (i % 2 == 0) {
    p.orig_conf = 0.1 * i;
    p.adv_conf = 0.3;
  }
  return p;
}

}  // namespace

TEST(IngestPairs, JsonlKeepsOrder) {
  TempDir dir;
  std::string content;
  for (int i = 0; i < 3; ++i) {
    std::string r = kRecord;
    r.replace(r.find("good movie"), 10, "sent" + std::to_string(i));
    content += r + "\n";
  }
  write_file(dir / "p.jsonl", content);
  const auto pairs = ingest_pairs(dir / "p.jsonl", PairFormat::Jsonl);
  ASSERT_EQ(pairs.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(pairs[i].original.text, "sent" + std::to_string(i));
  EXPECT_EQ(pairs[0].perturbed, "g00d movie");
  EXPECT_EQ(pairs[0].original.task_id, "sentiment");
  EXPECT_DOUBLE_EQ(*pairs[0].orig_conf, 0.9);
}

TEST(IngestPairs, MissingFieldNamesLineAndField) {
  TempDir dir;
  std::string bad = kRecord;
  bad.replace(bad.find("\"perturbed\":\"g00d movie\","), 25, "");
  write_file(dir / "p.jsonl", std::string(kRecord) + "\n" + bad + "\n");
  try {
    ingest_pairs(dir / "p.jsonl", PairFormat::Jsonl);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "perturbed");
  }
}

TEST(IngestPairs, UnsuccessfulPairRetained) {
  TempDir dir;
  std::string r = kRecord;
  r.replace(r.find("true"), 4, "false");
  write_file(dir / "p.jsonl", r + "\n");
  const auto pairs = ingest_pairs(dir / "p.jsonl", PairFormat::Jsonl);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_FALSE(pairs[0].success);
}

TEST(IngestPairs, ConfidenceOutOfRange) {
  TempDir dir;
  std::string r = kRecord;
  r.replace(r.find("0.4"), 3, "1.4");
  write_file(dir / "p.jsonl", r + "\n");
  try {
    ingest_pairs(dir / "p.jsonl", PairFormat::Jsonl);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.field(), "adv_conf");
  }
}

TEST(IngestPairs, UnknownFormatIsConfigError) {
  EXPECT_THROW(parse_pair_format("xml"), ConfigError);
  EXPECT_THROW(pair_format_for_path("pairs.parquet"), ConfigError);
  EXPECT_EQ(pair_format_for_path("a/b.csv"), PairFormat::Csv);
}

TEST(IngestPairs, RoundTripBothFormats) {
  TempDir dir;
  std::vector<AdversarialPair> pairs;
  for (int i = 0; i < 6; ++i) pairs.push_back(sample_pair(i));
  write_pairs_jsonl(dir / "p.jsonl", pairs);
  write_pairs_csv(dir / "p.csv", pairs);
  EXPECT_EQ(ingest_pairs(dir / "p.jsonl", PairFormat::Jsonl), pairs);
  EXPECT_EQ(ingest_pairs(dir / "p.csv", PairFormat::Csv), pairs);
}

TEST(IngestPairs, CsvErrorsCarryLine) {
  TempDir dir;
  write_file(dir / "p.csv",
             "original,label,task,dataset,perturbed,attack,model,success,orig_conf,adv_conf\n"
             "a,0,t,d,b,x,m,true,,\n"
             "a,zero,t,d,b,x,m,true,,\n");
  try {
    ingest_pairs(dir / "p.csv", PairFormat::Csv);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.field(), "label");
  }
  write_file(dir / "q.csv", "original,label\na,0\n");
  EXPECT_THROW(ingest_pairs(dir / "q.csv", PairFormat::Csv), DataError);
}

TEST(Dataset, RoundTripAndValidation) {
  TempDir dir;
  Dataset ds{"d", 2, {{"a b", 0, "t", "d"}, {"c", 1, "t", "d"}}};
  write_dataset(dir / "d.jsonl", ds);
  const auto back = read_dataset(dir / "d.jsonl");
  EXPECT_EQ(back.examples, ds.examples);
  EXPECT_EQ(back.num_classes, 2u);
  EXPECT_THROW(read_dataset(dir / "d.jsonl", 1), DataError);
  Dataset bad{"d", 1, {{"x", 3, "t", "d"}}};
  EXPECT_THROW(validate_dataset(bad), DataError);
}
