#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chunkrl/adamw.hpp"
#include "chunkrl/config.hpp"
#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/errors.hpp"
#include "chunkrl/metrics.hpp"
#include "chunkrl/policy.hpp"
#include "chunkrl/ppo.hpp"

namespace chunkrl {

class TrainingDiverged : public NonFiniteError {
 public:
  using NonFiniteError::NonFiniteError;
};

struct MinibatchStats {
  double beta = 0.0;
  double ppo_loss = 0.0;    // -mean clipped surrogate
  double bc_loss = 0.0;
  double value_loss = 0.0;  // mean clipped value loss, before value_weight
  double entropy = 0.0;
  double total_loss = 0.0;
  int excluded_ratios = 0;
  double ppo_grad_norm = 0.0;  // norm of the beta-weighted PPO contribution
  double bc_grad_norm = 0.0;
};

// Owns actor, critic and their optimizer state; one call = one AdamW step on
// each network for one minibatch.
class Learner {
 public:
  Learner(ChunkPolicy policy, ValueHead critic, const TrainConfig& config);

  // `transitions` and `advantages` may be empty (BC-only step); `bc_batch`
  // may be empty (plain PPO).
  MinibatchStats update(std::span<const MacroTransition> transitions,
                        std::span<const AdvantageEstimate> advantages,
                        std::span<const ChunkRecord> bc_batch);

  // Weight on the PPO term for the next update.
  double current_beta() const;

  std::int64_t optimizer_steps() const { return steps_; }
  const ChunkPolicy& policy() const { return policy_; }
  const ValueHead& critic() const { return critic_; }

 private:
  ChunkPolicy policy_;
  ValueHead critic_;
  TrainConfig config_;
  AdamWState actor_state_;
  AdamWState critic_state_;
  std::int64_t steps_ = 0;
};

struct UpdateLog {
  std::int64_t update_idx = 0;
  std::int64_t env_steps = 0;
  std::int64_t optimizer_steps = 0;
  double beta = 0.0;  // beta at the last optimizer step of the update
  double ppo_loss = 0.0;
  double bc_loss = 0.0;
  double value_loss = 0.0;
  std::size_t buffer_size = 0;
  std::int64_t admitted = 0;
  std::int64_t rejected = 0;
  int buffer_min_length = 0;
  int episodes_finished = 0;
  int rollout_successes = 0;
  int excluded_ratios = 0;
  std::optional<EvalReport> eval;
};

struct TrainResult {
  ChunkPolicy policy;
  ValueHead critic;
  std::vector<UpdateLog> log;
  EvalReport final_eval;
  std::optional<DemoBuffer> buffer;
  std::vector<Trajectory> seed_demos;
};

struct TrainHooks {
  std::function<void(const UpdateLog&)> on_update;
  // Written (policy + critic checkpoint) before TrainingDiverged propagates.
  std::string divergence_snapshot_path;
};

// Seed demonstrations for a config: loaded from demo_path or generated by
// the scripted expert on seeds disjoint from evaluation seeds.
std::vector<Trajectory> seed_demonstrations(const TrainConfig& config);
std::uint64_t demo_episode_seed(std::uint64_t run_seed, int index);

TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});

inline constexpr const char* kMetricsCsvHeader =
    "update_idx,env_steps,beta,ppo_loss,bc_loss,value_loss,buffer_size,eval_acc,eval_len_p10,eval_avg10";

std::string metrics_csv_row(const UpdateLog& row);
void write_metrics_csv(std::ostream& out, std::span<const UpdateLog> log);

}  // namespace chunkrl
