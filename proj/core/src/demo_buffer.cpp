#include "chunkrl/demo_buffer.hpp"

#include <algorithm>
#include <string>

#include "chunkrl/errors.hpp"

namespace chunkrl {

std::string_view source_name(TrajectorySource source) {
  return source == TrajectorySource::kExpert ? "expert" : "self";
}

std::vector<ChunkRecord> slice_chunks(std::span<const StepRecord> steps, int horizon) {
  if (horizon < 1) throw ConfigError("chunk horizon must be >= 1");
  std::vector<ChunkRecord> chunks;
  if (steps.empty()) return chunks;
  const int d = static_cast<int>(steps.front().action.size());
  const Eigen::VectorXd& last_action = steps.back().action;
  for (std::size_t start = 0; start < steps.size(); start += static_cast<std::size_t>(horizon)) {
    Eigen::VectorXd flat(horizon * d);
    for (int i = 0; i < horizon; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      const Eigen::VectorXd& a = idx < steps.size() ? steps[idx].action : last_action;
      if (a.size() != d) throw ShapeError("inconsistent action dimension inside a trajectory");
      flat.segment(i * d, d) = a;
    }
    chunks.push_back({steps[start].obs, ActionChunk(std::move(flat), horizon, d)});
  }
  return chunks;
}

DemoBuffer DemoBuffer::from_experts(std::vector<Trajectory> experts, const BufferOptions& options) {
  if (experts.empty()) throw ConfigError("demonstration buffer needs at least one expert trajectory");
  if (options.capacity < 1) throw ConfigError("buffer capacity must be positive");
  if (experts.size() > static_cast<std::size_t>(options.capacity)) {
    throw ConfigError("more expert trajectories (" + std::to_string(experts.size()) +
                      ") than buffer capacity (" + std::to_string(options.capacity) + ")");
  }
  int limit = 0;
  for (const auto& t : experts) {
    if (!t.success) throw ConfigError("expert trajectory did not succeed");
    if (t.chunks.empty()) throw ConfigError("expert trajectory has no chunk records");
    limit = std::max(limit, t.length);
  }
  DemoBuffer buffer;
  buffer.options_ = options;
  buffer.ell_limit_ = limit;
  buffer.stored_ = std::move(experts);
  buffer.rebuild_index();
  return buffer;
}

DemoBuffer DemoBuffer::restore(std::vector<Trajectory> stored, int ell_limit, const BufferOptions& options) {
  if (stored.size() > static_cast<std::size_t>(options.capacity)) {
    throw ConfigError("snapshot holds more trajectories than capacity");
  }
  DemoBuffer buffer;
  buffer.options_ = options;
  buffer.ell_limit_ = ell_limit;
  buffer.stored_ = std::move(stored);
  buffer.rebuild_index();
  return buffer;
}

bool DemoBuffer::try_admit(Trajectory traj) {
  const bool fits = !options_.length_filter || traj.length <= ell_limit_;
  if (!traj.success || !fits || traj.chunks.empty()) {
    ++rejected_;
    return false;
  }
  if (stored_.size() >= static_cast<std::size_t>(options_.capacity)) {
    stored_.erase(stored_.begin() + static_cast<std::ptrdiff_t>(eviction_index()));
  }
  stored_.push_back(std::move(traj));
  ++admitted_;
  if (options_.adaptive_limit) ell_limit_ = std::min(ell_limit_, max_length());
  rebuild_index();
  return true;
}

std::size_t DemoBuffer::eviction_index() const {
  if (options_.eviction == EvictionRule::kOldest) return 0;
  std::size_t worst = 0;
  for (std::size_t i = 1; i < stored_.size(); ++i) {
    if (stored_[i].length > stored_[worst].length) worst = i;  // strict: ties keep the oldest
  }
  return worst;
}

void DemoBuffer::rebuild_index() {
  prefix_.resize(stored_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < stored_.size(); ++i) {
    total += stored_[i].chunks.size();
    prefix_[i] = total;
  }
}

std::vector<ChunkRecord> DemoBuffer::sample(int batch_size, std::mt19937_64& rng) const {
  if (batch_size < 0) throw ConfigError("batch size must be non-negative");
  std::vector<ChunkRecord> batch;
  if (batch_size == 0) return batch;
  if (record_count() == 0) throw UsageError("cannot sample from an empty demonstration buffer");
  std::uniform_int_distribution<std::size_t> pick(0, record_count() - 1);
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) {
    const std::size_t r = pick(rng);
    const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), r);
    const auto t = static_cast<std::size_t>(it - prefix_.begin());
    const std::size_t offset = r - (t == 0 ? 0 : prefix_[t - 1]);
    batch.push_back(stored_[t].chunks[offset]);
  }
  return batch;
}

int DemoBuffer::min_length() const {
  int m = 0;
  for (std::size_t i = 0; i < stored_.size(); ++i) m = i == 0 ? stored_[i].length : std::min(m, stored_[i].length);
  return m;
}

int DemoBuffer::max_length() const {
  int m = 0;
  for (const auto& t : stored_) m = std::max(m, t.length);
  return m;
}

DemoBuffer init_buffer(std::vector<Trajectory> experts, int capacity) {
  BufferOptions options;
  options.capacity = capacity;
  return DemoBuffer::from_experts(std::move(experts), options);
}

std::vector<ChunkRecord> sample_bc_batch(const DemoBuffer& buffer, int batch_size, std::mt19937_64& rng) {
  if (buffer.empty() && batch_size > 0) throw UsageError("demonstration buffer is empty; seed it first");
  return buffer.sample(batch_size, rng);
}

namespace {

void split_batch(std::span<const ChunkRecord> batch, std::vector<Observation>& obs,
                 std::vector<ActionChunk>& chunks) {
  obs.reserve(batch.size());
  chunks.reserve(batch.size());
  for (const auto& rec : batch) {
    obs.push_back(rec.obs);
    chunks.push_back(rec.chunk);
  }
}

}  // namespace

double bc_loss(const ChunkPolicy& policy, std::span<const ChunkRecord> batch) {
  if (batch.empty()) throw UsageError("bc_loss needs a non-empty batch");
  double total = 0.0;
  for (const auto& rec : batch) total -= chunk_log_prob(policy, rec.obs, rec.chunk);
  return total / static_cast<double>(batch.size());
}

BcLossGrad bc_loss_and_grad(const ChunkPolicy& policy, std::span<const ChunkRecord> batch) {
  if (batch.empty()) throw UsageError("bc_loss needs a non-empty batch");
  std::vector<Observation> obs;
  std::vector<ActionChunk> chunks;
  split_batch(batch, obs, chunks);
  const LogProbBatch lp = evaluate_log_probs(policy, obs, chunks);
  const double n = static_cast<double>(batch.size());
  BcLossGrad out;
  out.loss = -lp.log_probs.sum() / n;
  out.grad = log_prob_gradient(policy, lp, Eigen::VectorXd::Constant(lp.log_probs.size(), -1.0 / n));
  return out;
}

}  // namespace chunkrl
