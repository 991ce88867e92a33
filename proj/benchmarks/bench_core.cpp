#include <benchmark/benchmark.h>

#include <random>

#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/mlp.hpp"
#include "chunkrl/ppo.hpp"
#include "chunkrl/rollout.hpp"
#include "chunkrl/trainer.hpp"

namespace {

using namespace chunkrl;

const PolicyShape kShape{kObsDim, kNumTasks, 4, kActionDim};

Eigen::MatrixXd random_inputs(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

void BM_MlpForward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto net = make_mlp({kShape.input_dim(), 64, 64, kShape.chunk_dim()}, rng);
  const auto x = random_inputs(kShape.input_dim(), static_cast<int>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(mlp_forward_batch(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(16)->Arg(256);

void BM_MlpForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto net = make_mlp({kShape.input_dim(), 64, 64, kShape.chunk_dim()}, rng);
  const int batch = static_cast<int>(state.range(0));
  const auto x = random_inputs(kShape.input_dim(), batch, rng);
  const auto upstream = random_inputs(kShape.chunk_dim(), batch, rng);
  ForwardCache cache;
  for (auto _ : state) {
    mlp_forward_batch(net, x, &cache);
    benchmark::DoNotOptimize(mlp_backward(net, cache, upstream));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpForwardBackward)->Arg(16)->Arg(256);

void BM_ComputeGae(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<MacroTransition> seg(static_cast<std::size_t>(state.range(0)));
  for (auto& t : seg) {
    t.reward_agg = u(rng);
    t.value_old = u(rng);
    t.next_value_old = u(rng);
    t.done = u(rng) > 0.9;
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_gae(seg, 0.96, 0.95));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComputeGae)->Arg(256)->Arg(4096);

void BM_Rollout(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto policy = make_chunk_policy(kShape, {64, 64}, -0.5, rng);
  const auto critic = make_value_head(kShape, {64, 64}, rng);
  RolloutCollector env(Task::kPush, 0, 0.99);
  std::int64_t steps = 0;
  for (auto _ : state) steps += env.collect(policy, critic, 256, rng).env_steps;
  state.SetItemsProcessed(steps);
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMillisecond);

void BM_LearnerUpdate(benchmark::State& state) {
  TrainConfig config;
  std::mt19937_64 rng(5);
  auto policy = make_chunk_policy(kShape, config.hidden, config.init_log_std, rng);
  auto critic = make_value_head(kShape, config.hidden, rng);
  RolloutCollector env(Task::kPush, 0, config.gamma);
  auto batch = env.collect(policy, critic, config.batch_size, rng);
  auto adv = compute_gae(batch.transitions, 0.96, config.lambda);
  const auto demo = run_expert_episode(Task::kPush, 1, 4);
  const auto buffer = init_buffer({demo}, config.buffer_capacity);
  const auto bc = sample_bc_batch(buffer, config.batch_size, rng);
  Learner learner(policy, critic, config);
  for (auto _ : state) benchmark::DoNotOptimize(learner.update(batch.transitions, adv, bc));
}
BENCHMARK(BM_LearnerUpdate);

void BM_BufferSample(benchmark::State& state) {
  std::vector<Trajectory> demos;
  for (std::uint64_t s = 0; s < 64; ++s) demos.push_back(run_expert_episode(Task::kPush, s, 4));
  const auto buffer = init_buffer(demos, 64);
  std::mt19937_64 rng(6);
  for (auto _ : state) benchmark::DoNotOptimize(buffer.sample(16, rng));
}
BENCHMARK(BM_BufferSample);

}  // namespace

BENCHMARK_MAIN();
