#pragma once

#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "chunkrl/mlp.hpp"

namespace chunkrl {

// Proprioceptive/object state plus the task index standing in for a prompt.
struct Observation {
  Eigen::VectorXd state;
  int prompt_id = 0;
};

// h consecutive d-dimensional actions, stored row-major as one h*d vector.
struct ActionChunk {
  Eigen::VectorXd actions;
  int horizon = 1;
  int action_dim = 1;

  ActionChunk() = default;
  ActionChunk(Eigen::VectorXd flat, int h, int d);

  Eigen::VectorXd action(int step) const { return actions.segment(step * action_dim, action_dim); }
  int size() const { return horizon * action_dim; }
};

struct PolicyShape {
  int state_dim = 0;
  int num_tasks = 1;
  int horizon = 1;
  int action_dim = 1;

  int input_dim() const { return state_dim + num_tasks; }
  int chunk_dim() const { return horizon * action_dim; }
};

// Diagonal Gaussian over the flattened chunk: mean from an MLP over
// [state, one_hot(prompt)], state-independent learned log standard deviation.
struct ChunkPolicy {
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 2.0;

  PolicyShape shape;
  MlpParams net;
  Eigen::VectorXd log_std;

  void clamp_log_std();
};

struct ValueHead {
  PolicyShape shape;
  MlpParams net;
};

ChunkPolicy make_chunk_policy(const PolicyShape& shape, const std::vector<int>& hidden,
                              double initial_log_std, std::mt19937_64& rng);
ValueHead make_value_head(const PolicyShape& shape, const std::vector<int>& hidden,
                          std::mt19937_64& rng);

// Validates the observation against the shape and appends the one-hot prompt.
Eigen::VectorXd encode_observation(const PolicyShape& shape, const Observation& obs);
Eigen::MatrixXd encode_batch(const PolicyShape& shape, std::span<const Observation> obs);

Eigen::VectorXd policy_mean(const ChunkPolicy& policy, const Observation& obs);

struct SampledChunk {
  ActionChunk chunk;  // unclamped sample
  double log_prob = 0.0;
};

SampledChunk sample_chunk(const ChunkPolicy& policy, const Observation& obs, std::mt19937_64& rng);

// Sum over all h*d components of the Gaussian log density.
double chunk_log_prob(const ChunkPolicy& policy, const Observation& obs, const ActionChunk& chunk);

double value_estimate(const ValueHead& critic, const Observation& obs);

// Differential entropy of the chunk distribution (independent of the state).
double policy_entropy(const ChunkPolicy& policy);

// ---- batched evaluation with gradients -------------------------------------

struct PolicyGrad {
  GradBundle net;
  Eigen::VectorXd log_std;

  bool all_finite() const { return net.all_finite() && log_std.allFinite(); }
};

// Forward state for a batch of (obs, chunk) pairs; reusable for the gradient.
struct LogProbBatch {
  Eigen::MatrixXd targets;  // chunk_dim x B
  Eigen::MatrixXd means;    // chunk_dim x B
  Eigen::VectorXd log_probs;
  ForwardCache cache;
};

LogProbBatch evaluate_log_probs(const ChunkPolicy& policy, std::span<const Observation> obs,
                                std::span<const ActionChunk> chunks);

// Gradient of sum_j coeffs[j] * log_prob_j with respect to net params and log_std.
PolicyGrad log_prob_gradient(const ChunkPolicy& policy, const LogProbBatch& batch,
                             const Eigen::VectorXd& coeffs);

struct ValueBatch {
  Eigen::VectorXd values;
  ForwardCache cache;
};

ValueBatch evaluate_values(const ValueHead& critic, std::span<const Observation> obs);

// Gradient of sum_j coeffs[j] * V(o_j).
GradBundle value_gradient(const ValueHead& critic, const ValueBatch& batch,
                          const Eigen::VectorXd& coeffs);

// ---- snapshots --------------------------------------------------------------

// "CRLPOL01" | u32 state_dim, num_tasks, horizon, action_dim | f64 log_std[h*d]
// | actor mlp | critic mlp
void write_checkpoint(std::ostream& out, const ChunkPolicy& policy, const ValueHead& critic);
std::pair<ChunkPolicy, ValueHead> read_checkpoint(std::istream& in);

}  // namespace chunkrl
