// Parallel library kernels against the serial reference versions.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "socialego/evaluation.hpp"
#include "socialego/nn/tape.hpp"
#include "socialego/reference.hpp"
#include "socialego/rng.hpp"
#include "socialego/synth_data.hpp"

namespace se = socialego;

namespace {

se::PoseSequence random_sequence(int frames, std::uint64_t seed) {
  const auto body = se::BodyModel::humanoid();
  se::Rng rng(seed);
  se::PoseSequence s;
  s.frames.resize(frames, body.pose_width());
  for (int t = 0; t < frames; ++t)
    for (int c = 0; c < body.pose_width(); ++c) s.frames(t, c) = static_cast<float>(0.3 * rng.normal());
  return s;
}

void BM_SequenceJoints(benchmark::State& state) {
  const auto body = se::BodyModel::humanoid();
  const auto seq = random_sequence(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(se::sequence_joints(seq, body));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SequenceJointsSerial(benchmark::State& state) {
  const auto body = se::BodyModel::humanoid();
  const auto seq = random_sequence(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(se::ref::sequence_joints(seq, body));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Metrics(benchmark::State& state) {
  const auto body = se::BodyModel::humanoid();
  const auto a = random_sequence(static_cast<int>(state.range(0)), 1);
  const auto b = random_sequence(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(se::compute_metrics(a, b, body));
}

void BM_MetricsSerial(benchmark::State& state) {
  const auto body = se::BodyModel::humanoid();
  const auto a = random_sequence(static_cast<int>(state.range(0)), 1);
  const auto b = random_sequence(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(se::ref::compute_metrics(a, b, body));
}

constexpr int kTokens = 60, kWidth = 64, kHeads = 4;

void BM_Attention(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  se::Rng rng(3);
  se::nn::Matrix q(batch * kTokens, kWidth);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = rng.normal();
  for (auto _ : state) {
    se::nn::Tape tape;
    const auto v = tape.constant(q);
    benchmark::DoNotOptimize(tape.value(tape.attention(v, v, v, kHeads, batch, kTokens, kTokens)));
  }
}

void BM_AttentionSerial(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  se::Rng rng(3);
  std::vector<double> q(static_cast<size_t>(kTokens) * kWidth);
  for (auto& x : q) x = rng.normal();
  for (auto _ : state)
    for (int b = 0; b < batch; ++b) benchmark::DoNotOptimize(se::ref::attention(q, q, q, kTokens, kTokens, kWidth, kHeads));
}

void BM_GenerateEpisodes(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(se::generate_episodes("mixed", static_cast<int>(state.range(0)), 70, 0.9, 7));
}

}  // namespace

BENCHMARK(BM_SequenceJoints)->Arg(60)->Arg(600);
BENCHMARK(BM_SequenceJointsSerial)->Arg(60)->Arg(600);
BENCHMARK(BM_Metrics)->Arg(60)->Arg(600);
BENCHMARK(BM_MetricsSerial)->Arg(60)->Arg(600);
BENCHMARK(BM_Attention)->Arg(8)->Arg(32);
BENCHMARK(BM_AttentionSerial)->Arg(8)->Arg(32);
BENCHMARK(BM_GenerateEpisodes)->Arg(16);

BENCHMARK_MAIN();
