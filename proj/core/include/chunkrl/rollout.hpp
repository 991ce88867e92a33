#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/envs.hpp"
#include "chunkrl/policy.hpp"
#include "chunkrl/ppo.hpp"

namespace chunkrl {

struct RolloutBatch {
  std::vector<MacroTransition> transitions;
  std::vector<Trajectory> trajectories;  // episodes that ended during this batch
  std::int64_t env_steps = 0;
};

// Builds a Trajectory from the steps of an ended episode. Throws UsageError
// if the last step is neither terminal nor truncated.
Trajectory finalize_trajectory(std::vector<StepRecord> steps, int task_id, int horizon,
                               TrajectorySource source);

// Owns one environment instance and the partially recorded episode running
// in it. Episodes carry over between collect() calls; finished episodes are
// reset with consecutive seeds starting at `first_episode_seed`.
class RolloutCollector {
 public:
  RolloutCollector(Task task, std::uint64_t first_episode_seed, double gamma);

  // Queries the policy once per macro step, executes the chunk open-loop
  // (stopping early when the episode ends) and records a MacroTransition.
  RolloutBatch collect(const ChunkPolicy& policy, const ValueHead& critic, int n_macro,
                       std::mt19937_64& rng);

  Task task() const { return task_; }
  std::int64_t episodes_started() const { return episodes_started_; }

 private:
  void start_episode();

  Task task_;
  double gamma_;
  std::uint64_t next_seed_;
  std::int64_t episodes_started_ = 0;
  EnvState state_;
  Observation obs_;
  std::vector<StepRecord> episode_;
};

inline RolloutBatch collect_rollout(const ChunkPolicy& policy, const ValueHead& critic,
                                    RolloutCollector& env, int n_macro, std::mt19937_64& rng) {
  return env.collect(policy, critic, n_macro, rng);
}

// Runs the rule-based expert for one episode; noise as in scripted_expert.
Trajectory run_expert_episode(Task task, std::uint64_t seed, int horizon, double noise = 0.0);

}  // namespace chunkrl
