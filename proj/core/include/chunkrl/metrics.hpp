#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chunkrl/envs.hpp"
#include "chunkrl/policy.hpp"

namespace chunkrl {

// Nearest-rank 10th percentile: sorted[ceil(0.1 n) - 1]. nullopt when empty.
std::optional<double> metric_len_p10(std::span<const int> lengths);

// Mean of the k = max(1, ceil(0.1 n)) smallest lengths. nullopt when empty.
std::optional<double> metric_avg_shortest10(std::span<const int> lengths);

struct EvalReport {
  Task task = Task::kReach;
  std::uint64_t seed = 0;
  int n_episodes = 0;
  double acc = 0.0;
  // Over successful episodes only; nullopt when nothing succeeded.
  std::optional<double> len_p10;
  std::optional<double> avg_shortest10;
  std::vector<int> lengths;
  std::vector<bool> successes;

  std::vector<int> successful_lengths() const;
};

// Builds the report from raw per-episode outcomes.
EvalReport summarize_episodes(Task task, std::uint64_t seed, std::vector<int> lengths,
                              std::vector<bool> successes);

// Runs the deterministic mean policy (one query per h steps, chunk executed
// open-loop) on episodes seeded seed, seed+1, ..., seed+n-1.
EvalReport evaluate(const ChunkPolicy& policy, Task task, int n_episodes, std::uint64_t seed);

// Scripted-expert counterpart of evaluate().
EvalReport evaluate_expert(Task task, int n_episodes, std::uint64_t seed);

// Compact JSON; undefined length metrics serialize as null.
std::string eval_report_json(const EvalReport& report);

// "-" for the undefined marker, shortest round-trip digits otherwise.
std::string format_metric(const std::optional<double>& value);

}  // namespace chunkrl
