#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "../support/oracles.hpp"
#include "procstruct/benchmarks.hpp"

using namespace procstruct;

namespace {

double p_value(double stat, std::size_t dof) {
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

std::vector<std::size_t> observed(int model, std::size_t n, std::uint64_t seed) {
  const auto net = build_model(ModelId{model});
  const auto counts = variants(playout(net, {n, 3, seed}));
  std::vector<std::size_t> out;
  for (const auto& v : enumerate_variants(net, 3)) {
    auto it = counts.find(v);
    out.push_back(it == counts.end() ? 0 : it->second);
  }
  return out;
}

}  // namespace

TEST(Uniformity, ModelOnePermutations) {
  const auto obs = observed(1, 12000, 17);
  ASSERT_EQ(obs.size(), 120u);
  EXPECT_GT(p_value(oracle::chi_square_uniform(obs), obs.size() - 1), 0.01);
}

TEST(Uniformity, ModelTwoChoices) {
  const auto obs = observed(2, 12000, 18);
  ASSERT_EQ(obs.size(), 128u);
  EXPECT_GT(p_value(oracle::chi_square_uniform(obs), obs.size() - 1), 0.01);
}

// Each inclusive-or block picks one of three silent routes; the "both" route
// then interleaves its two activities in either order.
TEST(Uniformity, ModelFourFollowsRoutingProbabilities) {
  const auto net = build_model(ModelId{4});
  const std::size_t n = 12000;
  const auto counts = variants(playout(net, {n, 3, 19}));
  double stat = 0.0;
  for (const auto& v : enumerate_variants(net, 3)) {
    // Blocks of length 2 contribute 1/6, blocks of length 1 contribute 1/3.
    double p = 1.0;
    std::size_t block_len = 0;
    char block = 0;
    auto close = [&] {
      if (block_len) p *= block_len == 1 ? 1.0 / 3.0 : 1.0 / 6.0;
    };
    for (const auto& a : v) {
      const char b = a[a.size() - 2];
      if (b != block) {
        close();
        block = b;
        block_len = 0;
      }
      ++block_len;
    }
    close();
    const double expected = p * static_cast<double>(n);
    auto it = counts.find(v);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    stat += (o - expected) * (o - expected) / expected;
  }
  EXPECT_GT(p_value(stat, 63), 0.01);
}
