#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <set>

#include "procstruct/benchmarks.hpp"
#include "procstruct/error.hpp"
#include "procstruct/petrinet.hpp"

using namespace procstruct;

namespace {

PetriNet chain() {
  return PetriNet({"p1", "p2"}, {{"t1", "A"}}, {{"p1", "t1"}, {"t1", "p2"}}, {{"p1", 1}}, {{"p2", 1}});
}

PetriNet join() {
  return PetriNet({"p1", "p2", "p3"}, {{"t", "A"}}, {{"p1", "t"}, {"p2", "t"}, {"t", "p3"}},
                  {{"p1", 1}, {"p2", 1}}, {{"p3", 1}});
}

PetriNet sequence_ab() {
  return PetriNet({"p0", "p1", "p2"}, {{"ta", "A"}, {"tb", "B"}},
                  {{"p0", "ta"}, {"ta", "p1"}, {"p1", "tb"}, {"tb", "p2"}}, {{"p0", 1}}, {{"p2", 1}});
}

// A then either B, or a silent redo back to the start.
PetriNet loop() {
  return PetriNet({"s", "m", "e"}, {{"a", "A"}, {"b", "B"}, {"redo", std::nullopt}},
                  {{"s", "a"}, {"a", "m"}, {"m", "b"}, {"b", "e"}, {"m", "redo"}, {"redo", "s"}},
                  {{"s", 1}}, {{"e", 1}});
}

}  // namespace

TEST(Enabled, SingleTransition) {
  const auto net = chain();
  EXPECT_EQ(enabled(net, net.marking({{"p1", 1}})), std::vector<std::size_t>{0});
  EXPECT_TRUE(enabled(net, net.marking({{"p2", 1}})).empty());
}

TEST(Enabled, ModelOneStartsWithTheSplit) {
  const auto net = build_model(ModelId{1});
  const auto en = enabled(net, net.initial_marking());
  ASSERT_EQ(en.size(), 1u);
  const auto& t = net.transitions()[en[0]];
  EXPECT_TRUE(t.silent());
  EXPECT_EQ(net.outputs(en[0]).size(), 5u);
}

TEST(Fire, MovesToken) {
  const auto net = chain();
  EXPECT_EQ(net.describe(fire(net, net.marking({{"p1", 1}}), 0)), (MarkingSpec{{"p2", 1}}));
}

TEST(Fire, SynchronisingJoin) {
  const auto net = join();
  EXPECT_EQ(net.describe(fire(net, net.initial_marking(), 0)), (MarkingSpec{{"p3", 1}}));
  EXPECT_THROW(fire(net, net.marking({{"p1", 1}}), 0), NotEnabledError);
}

TEST(Fire, NotEnabledThrows) {
  const auto net = chain();
  EXPECT_THROW(fire(net, net.marking({{"p2", 1}}), 0), NotEnabledError);
}

TEST(Fire, ConservesTokensWhenArcCountsMatch) {
  for (auto id : ModelId::all()) {
    const auto net = build_model(id);
    // Walk a few random-ish paths and check every firing along them.
    Marking m = net.initial_marking();
    for (int step = 0; step < 50 && m != net.final_marking(); ++step) {
      const auto en = enabled(net, m);
      ASSERT_FALSE(en.empty());
      const auto t = en[static_cast<std::size_t>(step) % en.size()];
      const auto next = fire(net, m, t);
      if (net.inputs(t).size() == net.outputs(t).size()) EXPECT_EQ(next.total(), m.total());
      m = next;
    }
  }
}

TEST(PetriNetValidation, RejectsBrokenNets) {
  EXPECT_THROW(PetriNet({"p"}, {{"t", "A"}}, {{"p", "x"}}, {{"p", 1}}, {{"p", 1}}), InvalidNetError);
  EXPECT_THROW(PetriNet({"p", "p"}, {{"t", "A"}}, {}, {{"p", 1}}, {{"p", 1}}), InvalidNetError);
  EXPECT_THROW(PetriNet({"p"}, {{"t", std::nullopt}}, {}, {{"p", 1}}, {{"p", 1}}), InvalidNetError);
  EXPECT_THROW(PetriNet({"p"}, {{"p", "A"}}, {}, {{"p", 1}}, {{"p", 1}}), InvalidNetError);
  EXPECT_THROW(PetriNet({"p"}, {{"t", "A"}}, {}, {{"q", 1}}, {{"p", 1}}), InvalidNetError);
}

TEST(Playout, SequenceGivesIdenticalTraces) {
  const auto log = playout(sequence_ab(), {5, 3, 7});
  ASSERT_EQ(log.size(), 5u);
  for (const auto& t : log.traces) EXPECT_EQ(t, (Trace{"A", "B"}));
}

TEST(Playout, ModelTwoStructure) {
  const auto log = playout(build_model(ModelId{2}), {1000, 3, 11});
  ASSERT_EQ(log.size(), 1000u);
  for (const auto& t : log.traces) {
    ASSERT_EQ(t.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
      const auto stem = "M2_A" + std::to_string(i + 1);
      EXPECT_TRUE(t[i] == stem + "a" || t[i] == stem + "b") << t[i];
    }
  }
}

TEST(Playout, SeedDeterminesLog) {
  const auto net = build_model(ModelId{5});
  EXPECT_EQ(playout(net, {300, 3, 5}).traces, playout(net, {300, 3, 5}).traces);
  EXPECT_NE(playout(net, {300, 3, 5}).traces, playout(net, {300, 3, 6}).traces);
}

TEST(Playout, VisitBoundLimitsLoops) {
  const auto net = loop();
  for (std::size_t bound = 1; bound <= 4; ++bound) {
    const auto log = playout(net, {400, bound, 1});
    std::size_t longest = 0;
    for (const auto& t : log.traces) longest = std::max(longest, t.size());
    // Each pass through the loop revisits the initial marking once more.
    EXPECT_EQ(longest, bound + 1);
  }
}

TEST(Playout, VariantsStayInsideTheEnumeratedLanguage) {
  for (auto id : ModelId::all()) {
    const auto net = build_model(id);
    const auto allowed = enumerate_variants(net, 3);
    const auto log = playout(net, {500, 3, 3});
    for (const auto& t : log.traces) EXPECT_TRUE(allowed.count(t)) << "model " << id.value();
  }
}

TEST(EnumerateVariants, SmallNets) {
  EXPECT_EQ(enumerate_variants(sequence_ab(), 1), (std::set<Variant>{{"A", "B"}}));
  EXPECT_EQ(enumerate_variants(loop(), 2),
            (std::set<Variant>{{"A", "B"}, {"A", "A", "B"}}));
}

TEST(EnumerateVariants, BudgetIsEnforced) {
  EXPECT_THROW(enumerate_variants(build_model(ModelId{5}), 3, 10), BudgetExceededError);
}

TEST(NetJson, RoundTrip) {
  for (auto id : ModelId::all()) {
    const auto net = build_model(id);
    const auto back = net_from_json(net_to_json(net));
    EXPECT_EQ(net_to_json(back), net_to_json(net));
    EXPECT_EQ(enumerate_variants(back, 3), enumerate_variants(net, 3));
  }
}

TEST(NetJson, RejectsMalformedInput) {
  EXPECT_THROW(net_from_json("{"), InvalidNetError);
  EXPECT_THROW(net_from_json(R"({"places": ["p"]})"), InvalidNetError);
}
