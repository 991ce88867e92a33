#include "chunkrl/rollout.hpp"

#include <cmath>

#include "chunkrl/errors.hpp"

namespace chunkrl {

Trajectory finalize_trajectory(std::vector<StepRecord> steps, int task_id, int horizon,
                               TrajectorySource source) {
  if (steps.empty() || !(steps.back().done || steps.back().truncated)) {
    throw UsageError("finalize_trajectory called before the episode ended");
  }
  Trajectory t;
  t.task_id = task_id;
  t.source = source;
  t.length = static_cast<int>(steps.size());
  t.success = steps.back().done;
  t.chunks = slice_chunks(steps, horizon);
  t.steps = std::move(steps);
  return t;
}

RolloutCollector::RolloutCollector(Task task, std::uint64_t first_episode_seed, double gamma)
    : task_(task), gamma_(gamma), next_seed_(first_episode_seed) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  start_episode();
}

void RolloutCollector::start_episode() {
  ResetResult r = env_reset(task_, next_seed_++);
  state_ = std::move(r.state);
  obs_ = std::move(r.obs);
  episode_.clear();
  ++episodes_started_;
}

RolloutBatch RolloutCollector::collect(const ChunkPolicy& policy, const ValueHead& critic, int n_macro,
                                       std::mt19937_64& rng) {
  if (n_macro < 1) throw ConfigError("rollout needs at least one macro step");
  RolloutBatch batch;
  batch.transitions.reserve(static_cast<std::size_t>(n_macro));
  const int h = policy.shape.horizon;
  for (int m = 0; m < n_macro; ++m) {
    MacroTransition tr;
    tr.obs = obs_;
    SampledChunk sampled = sample_chunk(policy, obs_, rng);
    tr.old_log_prob = sampled.log_prob;
    tr.value_old = value_estimate(critic, obs_);

    double discount = 1.0;
    StepResult last;
    for (int i = 0; i < h; ++i) {
      const Eigen::VectorXd action =
          sampled.chunk.action(i).cwiseMax(-1.0).cwiseMin(1.0);
      StepResult r = env_step(state_, action);
      episode_.push_back({obs_, action, r.reward, r.done, r.truncated});
      tr.reward_agg += discount * r.reward;
      discount *= gamma_;
      ++tr.executed_steps;
      ++batch.env_steps;
      obs_ = r.obs;
      last = std::move(r);
      if (last.done || last.truncated) break;
    }
    tr.chunk = std::move(sampled.chunk);
    tr.done = last.done;
    tr.truncated = last.truncated;
    tr.next_value_old = last.done ? 0.0 : value_estimate(critic, obs_);
    batch.transitions.push_back(std::move(tr));

    if (last.done || last.truncated) {
      batch.trajectories.push_back(
          finalize_trajectory(std::move(episode_), state_.task_id(), h, TrajectorySource::kSelf));
      start_episode();
    }
  }
  return batch;
}

Trajectory run_expert_episode(Task task, std::uint64_t seed, int horizon, double noise) {
  ResetResult r = env_reset(task, seed);
  std::mt19937_64 noise_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<StepRecord> steps;
  Observation obs = r.obs;
  for (;;) {
    const Eigen::VectorXd action = scripted_expert(r.state, noise, noise > 0.0 ? &noise_rng : nullptr);
    StepResult s = env_step(r.state, action);
    steps.push_back({obs, action, s.reward, s.done, s.truncated});
    obs = s.obs;
    if (s.done || s.truncated) break;
  }
  return finalize_trajectory(std::move(steps), static_cast<int>(task), horizon, TrajectorySource::kExpert);
}

}  // namespace chunkrl
