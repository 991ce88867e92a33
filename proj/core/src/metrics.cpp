#include "chunkrl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

std::size_t tenth_count(std::size_t n) {
  // ceil(0.1 n) in integer arithmetic
  return (n + 9) / 10;
}

}  // namespace

std::optional<double> metric_len_p10(std::span<const int> lengths) {
  if (lengths.empty()) return std::nullopt;
  std::vector<int> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<double>(sorted[tenth_count(sorted.size()) - 1]);
}

std::optional<double> metric_avg_shortest10(std::span<const int> lengths) {
  if (lengths.empty()) return std::nullopt;
  std::vector<int> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = std::max<std::size_t>(1, tenth_count(sorted.size()));
  const double sum = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return sum / static_cast<double>(k);
}

std::vector<int> EvalReport::successful_lengths() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (successes[i]) out.push_back(lengths[i]);
  }
  return out;
}

EvalReport summarize_episodes(Task task, std::uint64_t seed, std::vector<int> lengths,
                              std::vector<bool> successes) {
  if (lengths.size() != successes.size()) throw ShapeError("lengths and successes differ in size");
  EvalReport r;
  r.task = task;
  r.seed = seed;
  r.n_episodes = static_cast<int>(lengths.size());
  r.lengths = std::move(lengths);
  r.successes = std::move(successes);
  const auto wins = std::count(r.successes.begin(), r.successes.end(), true);
  r.acc = r.n_episodes > 0 ? static_cast<double>(wins) / r.n_episodes : 0.0;
  const std::vector<int> ok = r.successful_lengths();
  r.len_p10 = metric_len_p10(ok);
  r.avg_shortest10 = metric_avg_shortest10(ok);
  return r;
}

EvalReport evaluate(const ChunkPolicy& policy, Task task, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw ConfigError("evaluation needs at least one episode");
  std::vector<int> lengths;
  std::vector<bool> successes;
  const int h = policy.shape.horizon;
  for (int e = 0; e < n_episodes; ++e) {
    ResetResult r = env_reset(task, seed + static_cast<std::uint64_t>(e));
    Observation obs = r.obs;
    StepResult last;
    while (!r.state.finished) {
      const Eigen::VectorXd mean = policy_mean(policy, obs);
      for (int i = 0; i < h && !r.state.finished; ++i) {
        last = env_step(r.state, mean.segment(i * kActionDim, kActionDim));
        obs = last.obs;
      }
    }
    lengths.push_back(r.state.step_count);
    successes.push_back(last.success);
  }
  return summarize_episodes(task, seed, std::move(lengths), std::move(successes));
}

EvalReport evaluate_expert(Task task, int n_episodes, std::uint64_t seed) {
  std::vector<int> lengths;
  std::vector<bool> successes;
  for (int e = 0; e < n_episodes; ++e) {
    ResetResult r = env_reset(task, seed + static_cast<std::uint64_t>(e));
    StepResult last;
    while (!r.state.finished) last = env_step(r.state, scripted_expert(r.state));
    lengths.push_back(r.state.step_count);
    successes.push_back(last.success);
  }
  return summarize_episodes(task, seed, std::move(lengths), std::move(successes));
}

std::string format_metric(const std::optional<double>& value) {
  if (!value) return "-";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *value);
  return std::string(buf, ptr);
}

std::string eval_report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(r.task));
  j["seed"] = r.seed;
  j["n_episodes"] = r.n_episodes;
  j["acc"] = r.acc;
  j["len_p10"] = r.len_p10 ? nlohmann::ordered_json(*r.len_p10) : nlohmann::ordered_json(nullptr);
  j["avg_shortest10"] =
      r.avg_shortest10 ? nlohmann::ordered_json(*r.avg_shortest10) : nlohmann::ordered_json(nullptr);
  j["lengths"] = r.lengths;
  j["successes"] = r.successes;
  return j.dump(2);
}

}  // namespace chunkrl
