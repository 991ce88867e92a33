#include "chunkrl/envs.hpp"

#include <algorithm>
#include <cmath>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

Eigen::Vector2d clamp_box(const Eigen::Vector2d& v, double half_width) {
  return v.cwiseMax(-half_width).cwiseMin(half_width);
}

Eigen::Vector2d unit_or(const Eigen::Vector2d& v, const Eigen::Vector2d& fallback) {
  const double n = v.norm();
  return n > 1e-12 ? Eigen::Vector2d(v / n) : fallback;
}

Eigen::Vector2d uniform_point(std::mt19937_64& rng, double lo_x, double hi_x, double lo_y, double hi_y) {
  std::uniform_real_distribution<double> ux(lo_x, hi_x);
  std::uniform_real_distribution<double> uy(lo_y, hi_y);
  const double x = ux(rng);
  const double y = uy(rng);
  return {x, y};
}

Eigen::Vector2d uniform_square(std::mt19937_64& rng, double half) {
  return uniform_point(rng, -half, half, -half, half);
}

Eigen::VectorXd clip_action(const Eigen::Vector2d& a) {
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

// Expert gains. The waypoint offsets make push and latch demonstrations take
// a deliberate detour around the object.
constexpr double kReachGain = 2.0;
constexpr double kReachAxisTolerance = 0.02;
constexpr double kApproachGain = 3.0;
constexpr double kPushGain = 2.0;
constexpr double kPushLateralGain = 8.0;
constexpr double kPushStaging = 0.3;
constexpr double kLatchApproachHeight = 0.3;
constexpr double kLatchSlideGain = 1.5;
constexpr double kLatchSlideOvershoot = 0.05;

// Axis-by-axis: align x first (waypoint (goal.x, agent.y)), then close y.
Eigen::Vector2d reach_expert(const EnvState& s) {
  const Eigen::Vector2d diff = s.goal - s.agent;
  if (std::abs(diff.x()) > kReachAxisTolerance) return {kReachGain * diff.x(), 0.0};
  return {kReachGain * diff.x(), kReachGain * diff.y()};
}

// Back off to a staging point behind the box, line up, then push.
Eigen::Vector2d push_expert(const EnvState& s) {
  const Eigen::Vector2d u = unit_or(s.goal - s.object, Eigen::Vector2d::UnitX());
  const Eigen::Vector2d perp(-u.y(), u.x());
  const Eigen::Vector2d rel = s.agent - s.object;
  const double along = -rel.dot(u);
  const double lateral = rel.dot(perp);
  if (along > 0.05 && std::abs(lateral) < 0.03) {
    if (rel.norm() < kContactRadius + 0.04) {
      return kPushGain * (s.goal - s.object) - kPushLateralGain * lateral * perp;
    }
    return kApproachGain * (s.object - u * (kContactRadius + 0.01) - s.agent);
  }
  if (along > 0.08) return kApproachGain * (s.object - u * kPushStaging - s.agent);
  const double side = lateral >= 0.0 ? 1.0 : -1.0;
  const Eigen::Vector2d waypoint = s.object + perp * side * kPushStaging - u * kPushStaging;
  return kApproachGain * (waypoint - s.agent);
}

Eigen::Vector2d latch_expert(const EnvState& s) {
  if (s.latched) {
    const double target_x = s.handle_x0 + kLatchThreshold + kLatchSlideOvershoot;
    return {kLatchSlideGain * (target_x - s.agent.x()), 0.0};
  }
  const Eigen::Vector2d& handle = s.object;
  const bool above = std::abs(s.agent.x() - handle.x()) < 0.03 && s.agent.y() > handle.y() &&
                     s.agent.y() - handle.y() < kLatchApproachHeight + 0.05;
  if (above) return 2.0 * (handle - s.agent);
  return kApproachGain * (handle + Eigen::Vector2d(0.0, kLatchApproachHeight) - s.agent);
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kReach:
      return "sparse-reach";
    case Task::kPush:
      return "sparse-push";
    case Task::kLatch:
      return "sparse-latch";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  for (int id = 0; id < kNumTasks; ++id) {
    const Task t = static_cast<Task>(id);
    const std::string_view full = task_name(t);
    if (name == full || name == full.substr(7)) return t;
  }
  return std::nullopt;
}

Task task_from_id(int task_id) {
  if (task_id < 0 || task_id >= kNumTasks) {
    throw ConfigError("unknown task id " + std::to_string(task_id));
  }
  return static_cast<Task>(task_id);
}

Observation observe(const EnvState& s) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kObsDim);
  switch (s.task) {
    case Task::kReach:
      v << s.agent, s.goal, 0.0, 0.0, 0.0, 0.0;
      break;
    case Task::kPush:
      v << s.agent, s.object, s.object - s.agent, s.goal - s.object;
      break;
    case Task::kLatch:
      v << s.agent, s.object, s.object - s.agent, (s.latched ? 1.0 : 0.0),
          s.goal.x() - s.object.x();
      break;
  }
  return {std::move(v), s.task_id()};
}

bool task_solved(const EnvState& s) {
  switch (s.task) {
    case Task::kReach:
      return (s.agent - s.goal).norm() < kSuccessTolerance;
    case Task::kPush:
      return (s.object - s.goal).norm() < kSuccessTolerance;
    case Task::kLatch:
      return s.object.x() >= s.handle_x0 + kLatchThreshold;
  }
  return false;
}

ResetResult env_reset(Task task, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EnvState s;
  s.task = task;
  switch (task) {
    case Task::kReach:
      do {
        s.agent = uniform_square(rng, ResetRanges::kReachAgent);
        s.goal = uniform_square(rng, ResetRanges::kReachGoal);
      } while ((s.agent - s.goal).norm() < kMinStartSeparation);
      break;
    case Task::kPush:
      s.object = uniform_point(rng, -ResetRanges::kPushBoxX, ResetRanges::kPushBoxX, ResetRanges::kPushBoxYLo,
                               ResetRanges::kPushBoxYHi);
      s.goal = uniform_point(rng, -ResetRanges::kPushGoalX, ResetRanges::kPushGoalX, ResetRanges::kPushGoalYLo,
                             ResetRanges::kPushGoalYHi);
      s.agent = uniform_point(rng, -ResetRanges::kPushAgentX, ResetRanges::kPushAgentX,
                              ResetRanges::kPushAgentYLo, ResetRanges::kPushAgentYHi);
      break;
    case Task::kLatch:
      do {
        s.object = uniform_point(rng, ResetRanges::kLatchHandleXLo, ResetRanges::kLatchHandleXHi,
                                 -ResetRanges::kLatchHandleY, ResetRanges::kLatchHandleY);
        s.agent = uniform_square(rng, ResetRanges::kLatchAgent);
      } while ((s.agent - s.object).norm() < kMinStartSeparation);
      s.handle_x0 = s.object.x();
      s.goal = {s.handle_x0 + kLatchThreshold, s.object.y()};
      break;
  }
  Observation obs = observe(s);
  return {std::move(s), std::move(obs)};
}

ResetResult env_reset(int task_id, std::uint64_t seed) { return env_reset(task_from_id(task_id), seed); }

StepResult env_step(EnvState& s, const Eigen::VectorXd& action) {
  if (s.finished) throw UsageError("env_step called on a finished episode; reset first");
  if (action.size() != kActionDim) throw ShapeError("action must have 2 components");
  if (!action.allFinite()) throw NonFiniteError("non-finite action");
  const Eigen::Vector2d a = action.cwiseMax(-1.0).cwiseMin(1.0);

  Eigen::Vector2d velocity = a;
  // Pushing the box halves the pusher's speed.
  if (s.task == Task::kPush && (s.object - (s.agent + kDt * a)).norm() < kContactRadius) {
    velocity *= kPushDrag;
  }
  s.agent_velocity = velocity;
  s.agent = clamp_box(s.agent + kDt * velocity, kWorkspace);
  switch (s.task) {
    case Task::kReach:
      break;
    case Task::kPush: {
      // On penetration the box slides along the pusher's motion until the
      // contact distance is restored.
      const Eigen::Vector2d p = s.object - s.agent;
      if (p.norm() < kContactRadius) {
        const Eigen::Vector2d u = unit_or(a, unit_or(p, Eigen::Vector2d::UnitX()));
        const double pu = p.dot(u);
        const double t = -pu + std::sqrt(pu * pu - p.squaredNorm() + kContactRadius * kContactRadius);
        s.object = clamp_box(s.object + t * u, kWorkspace);
      }
      break;
    }
    case Task::kLatch:
      if (!s.latched && (s.agent - s.object).norm() < kSuccessTolerance) s.latched = true;
      if (s.latched) s.object.x() = std::clamp(s.agent.x(), s.handle_x0, s.handle_x0 + kLatchTravel);
      break;
  }
  ++s.step_count;

  StepResult r;
  r.success = task_solved(s);
  r.done = r.success;
  r.truncated = !r.success && s.step_count >= kMaxEpisodeSteps;
  r.reward = r.success ? 1.0 : 0.0;
  s.finished = r.done || r.truncated;
  r.obs = observe(s);
  return r;
}

Eigen::VectorXd scripted_expert(const EnvState& s, double noise, std::mt19937_64* rng) {
  Eigen::Vector2d a;
  switch (s.task) {
    case Task::kReach:
      a = reach_expert(s);
      break;
    case Task::kPush:
      a = push_expert(s);
      break;
    case Task::kLatch:
      a = latch_expert(s);
      break;
  }
  if (rng != nullptr && noise > 0.0) {
    std::uniform_real_distribution<double> jitter(-noise, noise);
    a.x() += jitter(*rng);
    a.y() += jitter(*rng);
  }
  return clip_action(a);
}

}  // namespace chunkrl
