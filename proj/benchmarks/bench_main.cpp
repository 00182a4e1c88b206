#include "sgdlab/checkpoint.hpp"
#include "sgdlab/metrics.hpp"
#include "sgdlab/optim.hpp"

#include <benchmark/benchmark.h>

using namespace sgdlab;

namespace {

const MlpSpec kToy{2, {100, 100}, 2};

Dataset toy_data() { return gen_two_gaussians({}); }

void BM_LossAndGrads(benchmark::State& state) {
  const Dataset ds = toy_data();
  const Weights w = init_weights(kToy, 0);
  std::vector<std::size_t> idx(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const Batch b = ds.rows(idx);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grads(kToy, w, b, 0.0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGrads)->Arg(10)->Arg(100);

void BM_SgdEpoch(benchmark::State& state) {
  const Dataset ds = toy_data();
  Weights w = init_weights(kToy, 0);
  Velocity v = zeros_like(kToy);
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.schedule = LrSchedule::constant(0.02);
  cfg.momentum = state.range(0) ? 0.9 : 0.0;
  int epoch = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sgd_epoch(kToy, w, v, ds, cfg, epoch++));
}
BENCHMARK(BM_SgdEpoch)->Arg(0)->Arg(1);

void BM_PathNorm(benchmark::State& state) {
  const Weights w = init_weights(kToy, 0);
  for (auto _ : state) benchmark::DoNotOptimize(path_norm(kToy, w, 2));
}
BENCHMARK(BM_PathNorm);

void BM_MarginEstimate(benchmark::State& state) {
  const Dataset ds = toy_data();
  const Weights w = init_weights(kToy, 0);
  const int res = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(margin_estimate(kToy, w, ds, {}, res));
}
BENCHMARK(BM_MarginEstimate)->Arg(64)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_CheckpointEncode(benchmark::State& state) {
  const MlpSpec spec{3072, {256}, 10};
  const Checkpoint c = make_checkpoint(spec, init_weights(spec, 0), 0);
  for (auto _ : state) benchmark::DoNotOptimize(encode_checkpoint(c));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(c.params.size() * 8));
}
BENCHMARK(BM_CheckpointEncode)->Unit(benchmark::kMillisecond);

void BM_CheckpointDecode(benchmark::State& state) {
  const MlpSpec spec{3072, {256}, 10};
  const auto bytes = encode_checkpoint(make_checkpoint(spec, init_weights(spec, 0), 0));
  for (auto _ : state) benchmark::DoNotOptimize(decode_checkpoint(bytes));
}
BENCHMARK(BM_CheckpointDecode)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
