#include <benchmark/benchmark.h>

#include "procstruct/benchmarks.hpp"
#include "procstruct/metrics.hpp"
#include "procstruct/neural.hpp"
#include "procstruct/predictor.hpp"
#include "procstruct/split.hpp"

using namespace procstruct;

static void BM_Playout(benchmark::State& state) {
  const auto net = build_model(ModelId{static_cast<int>(state.range(0))});
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(playout(net, {1000, 1000, ++seed}));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Playout)->DenseRange(1, 6)->Unit(benchmark::kMillisecond);

static void BM_EnumerateVariants(benchmark::State& state) {
  const auto net = build_model(ModelId{static_cast<int>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_variants(net, 3));
}
BENCHMARK(BM_EnumerateVariants)->DenseRange(1, 6)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto net = build_model(ModelId{2});
  const auto full = playout(net, {12000, 3, 1});
  const auto part = partition(full, lovocv_specs(full).front());
  const auto sim = playout(net, {12000, 3, 2});
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(sim, part.train, part.test));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

static void BM_LossAndGradients(benchmark::State& state) {
  const auto log = playout(build_model(ModelId{2}), {200, 3, 1});
  const auto vocab = build_vocabulary(log);
  auto samples = prefixes(log, vocab, 10);
  samples.resize(128);
  nn::NetworkShape shape;
  shape.vocab_size = vocab.size();
  shape.pad_token = static_cast<std::size_t>(vocab.pad());
  shape.hidden_size = static_cast<std::size_t>(state.range(0));
  shape.window = 10;
  const auto params = nn::init_params(shape, 1);
  const nn::RegularizationSpec reg{0.001, 0.001, 0.4};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(nn::loss_and_gradients(params, samples, reg, ++seed));
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_LossAndGradients)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_TrainingEpoch(benchmark::State& state) {
  const auto log = playout(build_model(ModelId{2}), {2000, 3, 1});
  const auto vocab = build_vocabulary(log);
  const auto split = validation_split(prefixes(log, vocab, 10), 0.2, 1);
  PredictorConfig c;
  c.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(c, split.train, split.validation, vocab));
}
BENCHMARK(BM_TrainingEpoch)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  const auto log = playout(build_model(ModelId{2}), {2000, 3, 1});
  const auto vocab = build_vocabulary(log);
  const auto split = validation_split(prefixes(log, vocab, 10), 0.2, 1);
  PredictorConfig c;
  c.max_epochs = 1;
  const auto p = train(c, split.train, split.validation, vocab);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_log(p, 1000, 14, ++seed));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
