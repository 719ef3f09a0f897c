#include <gtest/gtest.h>

#include <filesystem>

#include "noisyst/corpus.hpp"
#include "noisyst/errors.hpp"
#include "noisyst/vocab.hpp"

namespace noisyst {
namespace {

TEST(Vocabulary, ReservedTokensComeFirst) {
  const Vocabulary v;
  ASSERT_EQ(v.size(), kNumReserved);
  EXPECT_EQ(v.id("<pad>"), kPad);
  EXPECT_EQ(v.id("<bos>"), kBos);
  EXPECT_EQ(v.id("<eos>"), kEos);
  EXPECT_EQ(v.id("<unk>"), kUnk);
  EXPECT_EQ(v.id("<blank>"), kBlank);
  EXPECT_EQ(v.id("<sep>"), kSep);
}

TEST(Vocabulary, AddIsIdempotentAndUnknownMapsToUnk) {
  Vocabulary v({"a", "b", "a"});
  EXPECT_EQ(v.size(), kNumReserved + 2);
  EXPECT_EQ(v.add("b"), static_cast<TokenId>(kNumReserved + 1));
  EXPECT_EQ(v.id("zzz"), kUnk);
  EXPECT_FALSE(v.contains("zzz"));
  EXPECT_EQ(v.decode(v.encode({"b", "<sep>", "a"})), "b <sep> a");
}

TEST(Vocabulary, ValidateSequenceRejectsSpecialIds) {
  EXPECT_NO_THROW(validate_sequence({6, 7}, 8));
  EXPECT_THROW(validate_sequence({}, 8), UsageError);
  EXPECT_THROW(validate_sequence({6, kPad}, 8), UsageError);
  EXPECT_THROW(validate_sequence({kBos}, 8), UsageError);
  EXPECT_THROW(validate_sequence({kEos}, 8), UsageError);
  EXPECT_THROW(validate_sequence({8}, 8), UsageError);
}

TEST(Corpus, ParsesOneParallelLine) {
  const auto raw = parse_tsv("1 2 <sep> 7\t1 9\n", CorpusKind::kParallel);
  ASSERT_EQ(raw.size(), 1u);
  Vocabulary v;
  extend_vocabulary(v, raw);
  const Dataset d = to_dataset(raw, v);
  EXPECT_EQ(d[0].source.size(), 4u);
  EXPECT_EQ(d[0].target.size(), 2u);
  EXPECT_EQ(d[0].source[2], kSep);
}

TEST(Corpus, MissingTabNamesTheLine) {
  try {
    parse_tsv("a\tb\nc d\ne\tf\n", CorpusKind::kParallel, "corpus.tsv");
    FAIL() << "expected an error";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("corpus.tsv:2:"), std::string::npos) << e.what();
  }
}

TEST(Corpus, RejectsMalformedLines) {
  EXPECT_THROW(parse_tsv("", CorpusKind::kParallel), UsageError);
  EXPECT_THROW(parse_tsv("a\t\n", CorpusKind::kParallel), UsageError);
  EXPECT_THROW(parse_tsv("\tb\n", CorpusKind::kParallel), UsageError);
  EXPECT_THROW(parse_tsv("a\tb\tnotanumber\n", CorpusKind::kParallel), UsageError);
  EXPECT_THROW(parse_tsv("a\tb\n", CorpusKind::kUnlabeled), UsageError);
}

TEST(Corpus, ConfidenceColumnIsOptional) {
  const auto raw = parse_tsv("a\tb\t-0.25\nc\td\n", CorpusKind::kParallel);
  ASSERT_TRUE(raw[0].confidence.has_value());
  EXPECT_DOUBLE_EQ(*raw[0].confidence, -0.25);
  EXPECT_FALSE(raw[1].confidence.has_value());
}

TEST(Corpus, WriteReadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "noisyst_corpus_test";
  std::filesystem::remove_all(dir);
  Vocabulary v({"x", "y", "z"});
  const Dataset data = {{v.encode({"x", "y"}), v.encode({"z"})},
                        {v.encode({"z", "<sep>", "x"}), v.encode({"y", "y"})}};
  const std::vector<double> conf = {-0.125, -1.0 / 3.0};
  write_tsv(dir / "c.tsv", data, v, &conf);

  const IngestedCorpus back = ingest_corpus(dir / "c.tsv");
  ASSERT_EQ(back.examples.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back.vocab.decode(back.examples[i].source), v.decode(data[i].source));
    EXPECT_EQ(back.vocab.decode(back.examples[i].target), v.decode(data[i].target));
  }
  EXPECT_EQ(back.lines, (std::vector<std::size_t>{1, 2}));
  const auto raw = read_tsv(dir / "c.tsv", CorpusKind::kParallel);
  EXPECT_EQ(*raw[1].confidence, conf[1]);

  write_unlabeled_tsv(dir / "u.tsv", {data[0].source}, v);
  const auto u = read_tsv(dir / "u.tsv", CorpusKind::kUnlabeled);
  EXPECT_EQ(u[0].source, (std::vector<std::string>{"x", "y"}));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace noisyst
