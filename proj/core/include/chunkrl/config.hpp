#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "chunkrl/adamw.hpp"
#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/envs.hpp"

namespace chunkrl {

enum class TrainMode {
  kFull,    // chunked PPO + self behaviour cloning with the dynamic buffer
  kBcOnly,  // behaviour cloning on the seed demonstrations only (SFT baseline)
  kPpo,     // chunked PPO, no demonstrations, no BC term
};

std::string_view mode_name(TrainMode mode);

struct Ablations {
  bool chunking_off = false;      // h forced to 1
  bool buffer_frozen = false;     // no admissions after initialization
  bool buffer_unfiltered = false; // admit every success regardless of length
  bool fixed_beta_1to1 = false;   // beta_t == 1
};

struct TrainConfig {
  std::uint64_t seed = 0;
  Task task = Task::kReach;
  TrainMode mode = TrainMode::kFull;

  AdamWConfig optimizer{3e-4, 0.9, 0.999, 1e-8, 1e-4};
  double gamma = 0.99;
  double lambda = 0.95;
  double epsilon = 0.2;
  double value_clip = 0.2;
  double value_weight = 0.5;
  double entropy_weight = 0.0;
  int horizon = 4;
  std::int64_t warmup_steps = 2000;
  int batch_size = 16;
  std::int64_t total_steps = 20000;
  int epochs_per_update = 4;
  int rollout_macro_steps = 256;
  std::vector<int> hidden{64, 64};
  double init_log_std = -1.0;

  int n_demos = 10;
  double demo_noise = 0.0;
  std::string demo_path;  // JSON-lines demos; empty = run the scripted expert
  int buffer_capacity = 64;
  bool adaptive_limit = false;

  int eval_episodes = 128;
  std::uint64_t eval_seed = 0;
  int eval_interval = 10;  // updates between evaluations

  Ablations ablations;

  // Paper-scale optimizer schedule: lr 1e-5, T_warmup 40k, 500k steps.
  static TrainConfig paper_preset();

  int effective_horizon() const { return ablations.chunking_off ? 1 : horizon; }
  int minibatches_per_epoch() const { return (rollout_macro_steps + batch_size - 1) / batch_size; }
  int steps_per_update() const { return epochs_per_update * minibatches_per_epoch(); }

  // Throws ConfigError listing every violated constraint.
  void validate() const;
};

// Flat `key = value` text, '#' starts a comment. Unknown keys and unparsable
// values are collected and reported together in one ConfigError.
TrainConfig parse_config(std::string_view text, const TrainConfig& base = TrainConfig{});
TrainConfig load_config(const std::string& path, const TrainConfig& base = TrainConfig{});
void apply_overrides(TrainConfig& config, const std::vector<std::string>& assignments);
void apply_ablation(TrainConfig& config, std::string_view name);

// Every key, sorted, with round-trip-exact values.
std::string serialize_config(const TrainConfig& config);

std::vector<std::string> config_keys();

}  // namespace chunkrl
