#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "chunkrl/policy.hpp"

namespace chunkrl {

// Three sparse-reward tasks on the [-1, 1]^2 workspace, 2-D velocity actions.
//
//   reach: move the agent within kSuccessTolerance of a goal point.
//   push:  shove a disk-shaped box (contact radius kContactRadius) until its
//          centre is within kSuccessTolerance of the goal. A penetrating
//          pusher slows to kPushDrag and the box slides along its motion.
//   latch: touch a handle (within kSuccessTolerance) to grab it, then drag it
//          along its x-rail past handle_x0 + kLatchThreshold.
enum class Task : int { kReach = 0, kPush = 1, kLatch = 2 };

inline constexpr int kNumTasks = 3;
inline constexpr int kActionDim = 2;
inline constexpr int kObsDim = 8;
inline constexpr int kMaxEpisodeSteps = 200;
inline constexpr double kDt = 0.1;
inline constexpr double kSuccessTolerance = 0.05;
inline constexpr double kWorkspace = 1.0;
inline constexpr double kContactRadius = 0.1;
inline constexpr double kPushDrag = 0.5;  // speed factor while pushing the box
inline constexpr double kLatchThreshold = 0.4;
inline constexpr double kLatchTravel = 0.6;
inline constexpr double kMinStartSeparation = 0.3;

// Documented reset ranges (boxes are [lo, hi] per coordinate).
struct ResetRanges {
  static constexpr double kReachAgent = 0.8;  // agent, goal in [-0.8, 0.8]^2
  static constexpr double kReachGoal = 0.8;
  // push: box in [-0.2, 0.2] x [-0.3, -0.1], goal in [-0.2, 0.2] x [0.3, 0.5],
  // agent in [-0.3, 0.3] x [-0.9, -0.7]
  static constexpr double kPushBoxX = 0.2;
  static constexpr double kPushBoxYLo = -0.3;
  static constexpr double kPushBoxYHi = -0.1;
  static constexpr double kPushGoalX = 0.2;
  static constexpr double kPushGoalYLo = 0.3;
  static constexpr double kPushGoalYHi = 0.5;
  static constexpr double kPushAgentX = 0.3;
  static constexpr double kPushAgentYLo = -0.9;
  static constexpr double kPushAgentYHi = -0.7;
  static constexpr double kLatchHandleXLo = -0.6;
  static constexpr double kLatchHandleXHi = -0.2;
  static constexpr double kLatchHandleY = 0.5;  // handle y in [-0.5, 0.5]
  static constexpr double kLatchAgent = 0.9;
};

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
Task task_from_id(int task_id);

struct EnvState {
  Task task = Task::kReach;
  Eigen::Vector2d agent = Eigen::Vector2d::Zero();
  Eigen::Vector2d agent_velocity = Eigen::Vector2d::Zero();
  Eigen::Vector2d object = Eigen::Vector2d::Zero();  // box (push) or handle (latch)
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();    // goal point; latch: (x0 + threshold, rail y)
  double handle_x0 = 0.0;
  bool latched = false;
  int step_count = 0;
  bool finished = false;

  int task_id() const { return static_cast<int>(task); }
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
  bool success = false;
};

Observation observe(const EnvState& state);
bool task_solved(const EnvState& state);

struct ResetResult {
  EnvState state;
  Observation obs;
};

ResetResult env_reset(Task task, std::uint64_t seed);
ResetResult env_reset(int task_id, std::uint64_t seed);

// Clamps the action to [-1, 1]^2, integrates one kDt step and reports the
// sparse reward. Throws UsageError once the episode has finished.
StepResult env_step(EnvState& state, const Eigen::VectorXd& action);

// Rule-based controller. With a non-null rng, adds uniform noise in
// [-noise, noise] per action component.
Eigen::VectorXd scripted_expert(const EnvState& state, double noise = 0.0,
                                std::mt19937_64* rng = nullptr);

}  // namespace chunkrl
