#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "procstruct/error.hpp"
#include "procstruct/metrics.hpp"

using namespace procstruct;

namespace {

EventLog counts(std::initializer_list<std::pair<const char*, int>> spec) {
  EventLog log;
  for (const auto& [label, n] : spec)
    for (int i = 0; i < n; ++i) log.traces.push_back({label});
  return log;
}

EventLog to_log(const oracle::Log& l) { return EventLog{l}; }

}  // namespace

TEST(Fitness, WorkedExamples) {
  const auto tr = counts({{"A", 6}, {"B", 4}});
  EXPECT_EQ(fitness(counts({{"A", 7}, {"B", 4}, {"C", 1}}), tr), 1.0);
  EXPECT_EQ(fitness(counts({{"A", 12}}), tr), 0.6);
  EXPECT_EQ(fitness(counts({{"A", 9}, {"B", 5}, {"D", 3}}), tr), 1.0);
}

TEST(Precision, WorkedExamples) {
  const auto full = counts({{"A", 6}, {"B", 4}, {"C", 2}});
  EXPECT_EQ(precision(counts({{"A", 7}, {"B", 4}, {"C", 1}}), full), 11.0 / 12.0);
  EXPECT_EQ(precision(counts({{"A", 6}, {"B", 4}, {"D", 2}}), full), 10.0 / 12.0);
  EXPECT_EQ(precision(full, full), 1.0);
}

TEST(Generalisation, WorkedExamples) {
  const auto te = counts({{"C", 2}});
  EXPECT_EQ(generalisation(counts({{"A", 7}, {"B", 4}, {"C", 1}}), te), 0.5);
  EXPECT_EQ(generalisation(counts({{"A", 7}}), te), 0.0);
}

TEST(Evaluate, IdentityGivesOnes) {
  const auto tr = counts({{"A", 6}, {"B", 4}}), te = counts({{"C", 2}});
  EventLog full = tr;
  full.traces.insert(full.traces.end(), te.traces.begin(), te.traces.end());
  const auto r = evaluate(full, tr, te);
  EXPECT_EQ(r.fitness, 1.0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.generalisation, 1.0);
  EXPECT_EQ(r.correction, 1.0);
}

TEST(Evaluate, SameSizeUsesPlainMetrics) {
  const auto tr = counts({{"A", 6}, {"B", 4}}), te = counts({{"C", 2}});
  const auto sim = counts({{"A", 7}, {"B", 4}, {"C", 1}});
  const auto r = evaluate(sim, tr, te);
  EXPECT_EQ(r.fitness, 1.0);
  EXPECT_EQ(r.precision, 11.0 / 12.0);
  EXPECT_EQ(r.generalisation, 0.5);
}

TEST(Evaluate, DoublingTheSimulationChangesNothing) {
  const auto tr = counts({{"A", 6}, {"B", 4}}), te = counts({{"C", 2}});
  const auto sim = counts({{"A", 7}, {"B", 4}, {"C", 1}});
  const auto big = counts({{"A", 14}, {"B", 8}, {"C", 2}});
  const auto a = evaluate(sim, tr, te), b = evaluate(big, tr, te);
  EXPECT_DOUBLE_EQ(a.fitness, b.fitness);
  EXPECT_DOUBLE_EQ(a.precision, b.precision);
  EXPECT_DOUBLE_EQ(a.generalisation, b.generalisation);
  EXPECT_EQ(b.correction, 0.5);
}

TEST(Evaluate, EmptyInputsThrow) {
  const auto a = counts({{"A", 1}});
  EXPECT_THROW(evaluate(EventLog{}, a, a), MetricsError);
  EXPECT_THROW(evaluate(a, EventLog{}, a), MetricsError);
  EXPECT_THROW(evaluate(a, a, EventLog{}), MetricsError);
}

TEST(Evaluate, MatchesQuadraticOracleOnRandomLogs) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto tr = oracle::random_log(rng, 30, 3, 3);
    const auto te = oracle::random_log(rng, 20, 3, 3);
    auto sim = oracle::random_log(rng, 50, 3, 3);
    sim.resize(tr.size() + te.size(), sim.front());
    const auto want = oracle::scores_same_size(sim, tr, te);
    const auto got = evaluate(to_log(sim), to_log(tr), to_log(te));
    ASSERT_EQ(got.fitness, want.fitness);
    ASSERT_EQ(got.precision, want.precision);
    ASSERT_EQ(got.generalisation, want.generalisation);
  }
}

TEST(Evaluate, MatchesOracleWhenSizesDiffer) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 500; ++i) {
    const auto tr = oracle::random_log(rng, 30, 3, 2);
    const auto te = oracle::random_log(rng, 20, 3, 2);
    const auto sim = oracle::random_log(rng, 80, 3, 2);
    const auto want = oracle::scores_any_size(sim, tr, te);
    const auto got = evaluate(to_log(sim), to_log(tr), to_log(te));
    ASSERT_NEAR(got.fitness, want.fitness, 1e-12);
    ASSERT_NEAR(got.precision, want.precision, 1e-12);
    ASSERT_NEAR(got.generalisation, want.generalisation, 1e-12);
    ASSERT_GE(got.fitness, 0.0);
    ASSERT_LE(got.precision, 1.0);
  }
}

TEST(FoldCsv, RowLayout) {
  MetricsReport r;
  r.fitness = 0.5;
  r.precision = 0.25;
  r.generalisation = 1.0;
  r.size_tr = 10;
  r.size_te = 2;
  r.size_sim = 12;
  EXPECT_EQ(fold_csv_row("M2", 3, "A;B", r), "M2,3,A;B,0.500000,0.250000,1.000000,10,2,12,1.000000");
  EXPECT_EQ(std::string(kFoldCsvHeader),
            "model,fold,test_variants,fitness,precision,generalisation,size_tr,size_te,size_sim,correction");
}
