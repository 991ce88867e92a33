#include "chunkrl/policy.hpp"

#include <cmath>
#include <string>

#include "chunkrl/errors.hpp"
#include "chunkrl/serialize.hpp"

namespace chunkrl {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)
constexpr char kCheckpointMagic[9] = "CRLPOL01";

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void check_chunk(const PolicyShape& shape, const ActionChunk& chunk) {
  if (chunk.horizon != shape.horizon || chunk.action_dim != shape.action_dim ||
      chunk.actions.size() != shape.chunk_dim()) {
    throw ShapeError("action chunk is " + std::to_string(chunk.horizon) + "x" +
                     std::to_string(chunk.action_dim) + ", policy expects " +
                     std::to_string(shape.horizon) + "x" + std::to_string(shape.action_dim));
  }
}

}  // namespace

ActionChunk::ActionChunk(Eigen::VectorXd flat, int h, int d)
    : actions(std::move(flat)), horizon(h), action_dim(d) {
  if (h < 1 || d < 1 || actions.size() != static_cast<Eigen::Index>(h) * d) {
    throw ShapeError("action chunk storage does not match h x d");
  }
}

void ChunkPolicy::clamp_log_std() { log_std = log_std.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd); }

ChunkPolicy make_chunk_policy(const PolicyShape& shape, const std::vector<int>& hidden,
                              double initial_log_std, std::mt19937_64& rng) {
  if (shape.horizon < 1 || shape.action_dim < 1 || shape.state_dim < 1 || shape.num_tasks < 1) {
    throw ShapeError("policy shape must be positive");
  }
  ChunkPolicy policy;
  policy.shape = shape;
  policy.net = make_mlp(layer_sizes(shape.input_dim(), hidden, shape.chunk_dim()), rng);
  policy.log_std = Eigen::VectorXd::Constant(shape.chunk_dim(), initial_log_std);
  policy.clamp_log_std();
  return policy;
}

ValueHead make_value_head(const PolicyShape& shape, const std::vector<int>& hidden,
                          std::mt19937_64& rng) {
  return ValueHead{shape, make_mlp(layer_sizes(shape.input_dim(), hidden, 1), rng)};
}

Eigen::VectorXd encode_observation(const PolicyShape& shape, const Observation& obs) {
  if (obs.state.size() != shape.state_dim) {
    throw ShapeError("observation state has " + std::to_string(obs.state.size()) +
                     " entries, expected " + std::to_string(shape.state_dim));
  }
  if (obs.prompt_id < 0 || obs.prompt_id >= shape.num_tasks) {
    throw ShapeError("prompt id " + std::to_string(obs.prompt_id) + " out of range");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(shape.input_dim());
  x.head(shape.state_dim) = obs.state;
  x[shape.state_dim + obs.prompt_id] = 1.0;
  return x;
}

Eigen::MatrixXd encode_batch(const PolicyShape& shape, std::span<const Observation> obs) {
  Eigen::MatrixXd x(shape.input_dim(), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = encode_observation(shape, obs[j]);
  }
  return x;
}

Eigen::VectorXd policy_mean(const ChunkPolicy& policy, const Observation& obs) {
  return mlp_forward(policy.net, encode_observation(policy.shape, obs));
}

SampledChunk sample_chunk(const ChunkPolicy& policy, const Observation& obs, std::mt19937_64& rng) {
  const Eigen::VectorXd mean = policy_mean(policy, obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd sample(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    sample[i] = mean[i] + std::exp(policy.log_std[i]) * normal(rng);
  }
  // Same expression as chunk_log_prob, evaluated on the stored sample.
  double log_prob = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (sample[i] - mean[i]) * std::exp(-policy.log_std[i]);
    log_prob += -0.5 * z * z - policy.log_std[i] - kHalfLog2Pi;
  }
  return {ActionChunk(std::move(sample), policy.shape.horizon, policy.shape.action_dim), log_prob};
}

double chunk_log_prob(const ChunkPolicy& policy, const Observation& obs, const ActionChunk& chunk) {
  check_chunk(policy.shape, chunk);
  const Eigen::VectorXd mean = policy_mean(policy, obs);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double z = (chunk.actions[i] - mean[i]) * std::exp(-policy.log_std[i]);
    total += -0.5 * z * z - policy.log_std[i] - kHalfLog2Pi;
  }
  return total;
}

double value_estimate(const ValueHead& critic, const Observation& obs) {
  return mlp_forward(critic.net, encode_observation(critic.shape, obs))[0];
}

double policy_entropy(const ChunkPolicy& policy) {
  return (policy.log_std.array() + 0.5 + kHalfLog2Pi).sum();
}

LogProbBatch evaluate_log_probs(const ChunkPolicy& policy, std::span<const Observation> obs,
                                std::span<const ActionChunk> chunks) {
  if (obs.size() != chunks.size()) throw ShapeError("observation and chunk batches differ in size");
  LogProbBatch batch;
  const auto n = static_cast<Eigen::Index>(obs.size());
  batch.targets.resize(policy.shape.chunk_dim(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    check_chunk(policy.shape, chunks[static_cast<std::size_t>(j)]);
    batch.targets.col(j) = chunks[static_cast<std::size_t>(j)].actions;
  }
  batch.means = mlp_forward_batch(policy.net, encode_batch(policy.shape, obs), &batch.cache);
  const Eigen::ArrayXd inv_std = (-policy.log_std.array()).exp();
  const double log_norm = policy.log_std.sum() + kHalfLog2Pi * static_cast<double>(policy.shape.chunk_dim());
  batch.log_probs.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::ArrayXd z = (batch.targets.col(j) - batch.means.col(j)).array() * inv_std;
    batch.log_probs[j] = -0.5 * z.square().sum() - log_norm;
  }
  return batch;
}

PolicyGrad log_prob_gradient(const ChunkPolicy& policy, const LogProbBatch& batch,
                             const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != batch.means.cols()) throw ShapeError("coefficient count != batch size");
  const Eigen::ArrayXd inv_var = (-2.0 * policy.log_std.array()).exp();
  const Eigen::MatrixXd diff = batch.targets - batch.means;
  // d logp / d mean = (a - mean) / var ; d logp / d log_std = z^2 - 1
  Eigen::MatrixXd upstream = (diff.array().colwise() * inv_var).matrix();
  upstream *= coeffs.asDiagonal();
  PolicyGrad grad;
  grad.net = mlp_backward(policy.net, batch.cache, upstream);
  grad.log_std = Eigen::VectorXd::Zero(policy.log_std.size());
  for (Eigen::Index j = 0; j < diff.cols(); ++j) {
    grad.log_std.array() += coeffs[j] * (diff.col(j).array().square() * inv_var - 1.0);
  }
  return grad;
}

ValueBatch evaluate_values(const ValueHead& critic, std::span<const Observation> obs) {
  ValueBatch batch;
  batch.values = mlp_forward_batch(critic.net, encode_batch(critic.shape, obs), &batch.cache).row(0).transpose();
  return batch;
}

GradBundle value_gradient(const ValueHead& critic, const ValueBatch& batch,
                          const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != batch.values.size()) throw ShapeError("coefficient count != batch size");
  return mlp_backward(critic.net, batch.cache, coeffs.transpose());
}

void write_checkpoint(std::ostream& out, const ChunkPolicy& policy, const ValueHead& critic) {
  binio::write_magic(out, kCheckpointMagic);
  const PolicyShape& s = policy.shape;
  binio::write_u32(out, static_cast<std::uint32_t>(s.state_dim));
  binio::write_u32(out, static_cast<std::uint32_t>(s.num_tasks));
  binio::write_u32(out, static_cast<std::uint32_t>(s.horizon));
  binio::write_u32(out, static_cast<std::uint32_t>(s.action_dim));
  binio::write_f64s(out, {policy.log_std.data(), static_cast<std::size_t>(policy.log_std.size())});
  write_mlp(out, policy.net);
  write_mlp(out, critic.net);
  if (!out) throw IoError("failed writing checkpoint");
}

std::pair<ChunkPolicy, ValueHead> read_checkpoint(std::istream& in) {
  binio::expect_magic(in, kCheckpointMagic);
  PolicyShape s;
  s.state_dim = static_cast<int>(binio::read_u32(in));
  s.num_tasks = static_cast<int>(binio::read_u32(in));
  s.horizon = static_cast<int>(binio::read_u32(in));
  s.action_dim = static_cast<int>(binio::read_u32(in));
  if (s.state_dim < 1 || s.num_tasks < 1 || s.horizon < 1 || s.action_dim < 1 ||
      s.chunk_dim() > (1 << 16)) {
    throw IoError("implausible checkpoint metadata");
  }
  ChunkPolicy policy;
  policy.shape = s;
  policy.log_std.resize(s.chunk_dim());
  binio::read_f64s(in, {policy.log_std.data(), static_cast<std::size_t>(policy.log_std.size())});
  policy.net = read_mlp(in);
  ValueHead critic{s, read_mlp(in)};
  if (policy.net.in_dim() != s.input_dim() || policy.net.out_dim() != s.chunk_dim() ||
      critic.net.in_dim() != s.input_dim() || critic.net.out_dim() != 1) {
    throw IoError("checkpoint networks disagree with metadata");
  }
  return {std::move(policy), std::move(critic)};
}

}  // namespace chunkrl
