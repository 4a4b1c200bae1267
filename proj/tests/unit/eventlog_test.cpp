#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "procstruct/benchmarks.hpp"
#include "procstruct/error.hpp"
#include "procstruct/eventlog.hpp"

using namespace procstruct;

namespace {

EventLog abac() { return EventLog{{{"A", "B"}, {"A", "B"}, {"A", "C"}}}; }

EventLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

}  // namespace

TEST(Variants, CountsMultiplicities) {
  EXPECT_EQ(variants(abac()), (VariantCounts{{{"A", "B"}, 2}, {{"A", "C"}, 1}}));
  EXPECT_TRUE(variants(EventLog{}).empty());
}

TEST(Variants, ModelTwoLogCoversAllVariants) {
  const auto log = playout(build_model(ModelId{2}), {12000, 3, 1});
  EXPECT_EQ(variants(log).size(), 128u);
}

TEST(Occ, MatchesVariantCounts) {
  const auto log = abac();
  EXPECT_EQ(occ({"A", "B"}, log), 2u);
  EXPECT_EQ(occ({"Z"}, log), 0u);
  std::size_t sum = 0;
  for (const auto& [v, n] : variants(log)) {
    EXPECT_EQ(occ(v, log), n);
    sum += occ(v, log);
  }
  EXPECT_EQ(sum, log.size());
}

TEST(Vocabulary, SortedActivitiesThenSpecials) {
  const auto vocab = build_vocabulary(EventLog{{{"B", "A"}}});
  EXPECT_EQ(vocab.activities(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(vocab.size(), 5u);
  EXPECT_EQ(vocab.bos(), 2);
  EXPECT_EQ(vocab.eos(), 3);
  EXPECT_EQ(vocab.pad(), 4);
  EXPECT_EQ(vocab.label(vocab.eos()), Vocabulary::kEos);
  EXPECT_EQ(vocab.index_of("B"), 1);
  EXPECT_FALSE(vocab.find("C").has_value());
  EXPECT_THROW(vocab.index_of("C"), Error);
}

TEST(Vocabulary, ModelOneHasEightTokens) {
  const auto log = playout(build_model(ModelId{1}), {200, 3, 2});
  EXPECT_EQ(build_vocabulary(log).size(), 8u);
}

TEST(Vocabulary, DependsOnlyOnLabelSet) {
  EXPECT_EQ(build_vocabulary(EventLog{{{"B", "A"}}}), build_vocabulary(EventLog{{{"A"}, {"B", "B"}}}));
}

TEST(Vocabulary, RejectsReservedAndMalformedLabels) {
  EXPECT_THROW(Vocabulary({"A", "<EOS>"}), Error);
  EXPECT_THROW(Vocabulary({"A;B"}), Error);
  EXPECT_THROW(Vocabulary({""}), Error);
}

TEST(Prefixes, OneSamplePerEventPlusEnd) {
  const EventLog log{{{"A", "B"}}};
  const auto vocab = build_vocabulary(log);
  const auto samples = prefixes(log, vocab, 10);
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0].target, vocab.index_of("A"));
  EXPECT_EQ(samples[1].target, vocab.index_of("B"));
  EXPECT_EQ(samples[2].target, vocab.eos());
  std::vector<Token> expected(10, vocab.pad());
  expected[8] = vocab.bos();
  expected[9] = vocab.index_of("A");
  EXPECT_EQ(samples[1].prefix, expected);
}

TEST(Prefixes, LeftTruncatesLongHistories) {
  Trace t;
  for (int i = 0; i < 12; ++i) t.push_back(std::string(1, static_cast<char>('A' + i)));
  const EventLog log{{t}};
  const auto vocab = build_vocabulary(log);
  const auto samples = prefixes(log, vocab, 10);
  ASSERT_EQ(samples.size(), 13u);
  const auto& last = samples.back();
  EXPECT_EQ(last.target, vocab.eos());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(last.prefix[i], vocab.index_of(t[2 + i]));
}

TEST(Prefixes, TotalCount) {
  const auto log = playout(build_model(ModelId{4}), {300, 3, 9});
  std::size_t expected = 0;
  for (const auto& t : log.traces) expected += t.size() + 1;
  EXPECT_EQ(prefixes(log, build_vocabulary(log), 10).size(), expected);
}

TEST(LogIo, ParsesLines) {
  EXPECT_EQ(parse("A;B\nA;C\n").traces, (std::vector<Trace>{{"A", "B"}, {"A", "C"}}));
  EXPECT_TRUE(parse("").empty());
}

TEST(LogIo, ReportsTheOffendingLine) {
  try {
    parse("A;B\nA;;C\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(LogIo, FileRoundTripKeepsOrderAndEmptyTraces) {
  auto log = playout(build_model(ModelId{6}), {500, 3, 4});
  log.traces.insert(log.traces.begin() + 7, Trace{});
  const auto path = std::filesystem::temp_directory_path() / "procstruct_log_roundtrip.txt";
  write_log(log, path);
  EXPECT_EQ(read_log(path), log);
  std::filesystem::remove(path);
}

TEST(LogIo, MissingFileThrows) {
  EXPECT_THROW(read_log("/nonexistent/procstruct.log"), Error);
}
