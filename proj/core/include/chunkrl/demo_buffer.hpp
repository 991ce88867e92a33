#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "chunkrl/policy.hpp"

namespace chunkrl {

enum class TrajectorySource { kExpert, kSelf };

std::string_view source_name(TrajectorySource source);

// One env step: the observation the action was taken from, the executed
// (clamped) action and what the environment reported.
struct StepRecord {
  Observation obs;
  Eigen::VectorXd action;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
};

struct ChunkRecord {
  Observation obs;
  ActionChunk chunk;
};

struct Trajectory {
  int task_id = 0;
  TrajectorySource source = TrajectorySource::kSelf;
  std::vector<StepRecord> steps;
  std::vector<ChunkRecord> chunks;  // stride-h slices of `steps`
  int length = 0;                   // env steps
  bool success = false;
};

// Chunk records at steps 0, h, 2h, ...; a trailing partial chunk repeats the
// episode's last action.
std::vector<ChunkRecord> slice_chunks(std::span<const StepRecord> steps, int horizon);

enum class EvictionRule { kLongest, kOldest };

struct BufferOptions {
  int capacity = 64;
  // Admit successes of any length (the unfiltered ablation).
  bool length_filter = true;
  // Shrink ell_limit to the longest stored trajectory after each admission.
  bool adaptive_limit = false;
  EvictionRule eviction = EvictionRule::kLongest;
};

// Successful, length-bounded trajectories used as behaviour-cloning targets.
class DemoBuffer {
 public:
  DemoBuffer() = default;

  // Seeds the buffer with successful expert demonstrations; ell_limit is the
  // longest of them. Throws ConfigError on an empty set, a failed
  // demonstration or more demonstrations than capacity.
  static DemoBuffer from_experts(std::vector<Trajectory> experts, const BufferOptions& options);

  // Restores a snapshot verbatim (no admission checks on the stored set).
  static DemoBuffer restore(std::vector<Trajectory> stored, int ell_limit, const BufferOptions& options);

  // Admits iff successful and (when filtering) length <= ell_limit. A full
  // buffer evicts per options().eviction before inserting.
  bool try_admit(Trajectory traj);

  // Record-uniform sampling over all chunk records of all stored trajectories.
  std::vector<ChunkRecord> sample(int batch_size, std::mt19937_64& rng) const;

  const std::vector<Trajectory>& trajectories() const { return stored_; }
  int ell_limit() const { return ell_limit_; }
  const BufferOptions& options() const { return options_; }
  int capacity() const { return options_.capacity; }
  std::int64_t admitted_count() const { return admitted_; }
  std::int64_t rejected_count() const { return rejected_; }
  std::size_t size() const { return stored_.size(); }
  bool empty() const { return stored_.empty(); }
  std::size_t record_count() const { return prefix_.empty() ? 0 : prefix_.back(); }
  int min_length() const;
  int max_length() const;

 private:
  void rebuild_index();
  std::size_t eviction_index() const;

  std::vector<Trajectory> stored_;
  std::vector<std::size_t> prefix_;  // prefix_[i] = records in stored_[0..i]
  int ell_limit_ = 0;
  BufferOptions options_;
  std::int64_t admitted_ = 0;
  std::int64_t rejected_ = 0;
};

DemoBuffer init_buffer(std::vector<Trajectory> experts, int capacity);

inline bool try_admit(DemoBuffer& buffer, Trajectory traj) { return buffer.try_admit(std::move(traj)); }

// Throws UsageError on an empty buffer.
std::vector<ChunkRecord> sample_bc_batch(const DemoBuffer& buffer, int batch_size, std::mt19937_64& rng);

// Mean negative chunk log-likelihood over the batch.
double bc_loss(const ChunkPolicy& policy, std::span<const ChunkRecord> batch);

struct BcLossGrad {
  double loss = 0.0;
  PolicyGrad grad;
};

BcLossGrad bc_loss_and_grad(const ChunkPolicy& policy, std::span<const ChunkRecord> batch);

}  // namespace chunkrl
