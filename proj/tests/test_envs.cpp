#include <doctest.h>

#include <cmath>
#include <random>

#include "chunkrl/errors.hpp"
#include "chunkrl/envs.hpp"
#include "chunkrl/rollout.hpp"
#include "support.hpp"

using namespace chunkrl;

namespace {

EnvState reach_state(Eigen::Vector2d agent, Eigen::Vector2d goal) {
  EnvState s;
  s.task = Task::kReach;
  s.agent = agent;
  s.goal = goal;
  return s;
}

int run_expert(Task task, std::uint64_t seed, bool* success) {
  auto reset = env_reset(task, seed);
  EnvState s = reset.state;
  for (;;) {
    const auto r = env_step(s, scripted_expert(s));
    if (r.done || r.truncated) {
      *success = r.success;
      return s.step_count;
    }
  }
}

}  // namespace

TEST_CASE("task names round trip") {
  for (int id = 0; id < kNumTasks; ++id) {
    const Task t = task_from_id(id);
    CHECK(parse_task(task_name(t)) == t);
  }
  CHECK(parse_task("sparse-push") == Task::kPush);
  CHECK(parse_task("push") == Task::kPush);
  CHECK_FALSE(parse_task("sparse-fly").has_value());
  CHECK_THROWS_AS(env_reset(7, 0), ConfigError);
}

TEST_CASE("env_reset: deterministic per seed and step count zero") {
  for (int id = 0; id < kNumTasks; ++id) {
    const auto a = env_reset(id, 1234);
    const auto b = env_reset(id, 1234);
    CHECK(a.obs.state == b.obs.state);
    CHECK(a.obs.prompt_id == id);
    CHECK(a.obs.state.size() == kObsDim);
    CHECK(a.state.step_count == 0);
  }
}

TEST_CASE("env_reset: sampled positions stay inside their ranges") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto reach = env_reset(Task::kReach, seed).state;
    CHECK(reach.goal.cwiseAbs().maxCoeff() <= ResetRanges::kReachGoal);
    CHECK(reach.agent.cwiseAbs().maxCoeff() <= ResetRanges::kReachAgent);

    const auto push = env_reset(Task::kPush, seed).state;
    CHECK(std::abs(push.goal.x()) <= ResetRanges::kPushGoalX);
    CHECK(push.goal.y() >= ResetRanges::kPushGoalYLo);
    CHECK(push.goal.y() <= ResetRanges::kPushGoalYHi);
    CHECK(std::abs(push.object.x()) <= ResetRanges::kPushBoxX);
    CHECK(push.object.y() >= ResetRanges::kPushBoxYLo);
    CHECK(push.object.y() <= ResetRanges::kPushBoxYHi);

    const auto latch = env_reset(Task::kLatch, seed).state;
    CHECK(latch.object.x() >= ResetRanges::kLatchHandleXLo);
    CHECK(latch.object.x() <= ResetRanges::kLatchHandleXHi);
    CHECK(latch.goal.x() == doctest::Approx(latch.handle_x0 + kLatchThreshold));
  }
}

TEST_CASE("env_reset: goal coordinates vary across seeds") {
  for (int id = 0; id < kNumTasks; ++id) {
    double sum = 0.0, sq = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double g = env_reset(id, seed).state.goal.x();
      sum += g;
      sq += g * g;
    }
    const double var = sq / 100 - (sum / 100) * (sum / 100);
    CHECK(var > 1e-4);
  }
}

TEST_CASE("env_step: already at the goal succeeds on the first step") {
  auto s = reach_state({0.2, 0.2}, {0.21, 0.2});
  const auto r = env_step(s, Eigen::Vector2d::Zero());
  CHECK(r.success);
  CHECK(r.done);
  CHECK(r.reward == 1.0);
  CHECK_THROWS_AS(env_step(s, Eigen::Vector2d::Zero()), UsageError);
}

TEST_CASE("env_step: idle episode truncates without reward") {
  auto s = env_reset(Task::kReach, 3).state;
  double total = 0.0;
  StepResult r;
  for (int t = 0; t < kMaxEpisodeSteps; ++t) {
    r = env_step(s, Eigen::Vector2d::Zero());
    total += r.reward;
    if (t + 1 < kMaxEpisodeSteps) CHECK_FALSE(r.truncated);
  }
  CHECK(r.truncated);
  CHECK_FALSE(r.done);
  CHECK(total == 0.0);
}

TEST_CASE("env_step: unit action closes 0.5 in five steps") {
  auto s = reach_state({-0.25, 0.0}, {0.25, 0.0});
  int steps = 0;
  StepResult r;
  do {
    r = env_step(s, Eigen::Vector2d(1.0, 0.0));
    ++steps;
  } while (!r.done && steps < 10);
  CHECK(steps == 5);
}

TEST_CASE("env_step: actions are clamped and validated") {
  auto s = reach_state({0.0, 0.0}, {0.9, 0.9});
  env_step(s, Eigen::Vector2d(5.0, -5.0));
  CHECK(s.agent.x() == doctest::Approx(0.1));
  CHECK(s.agent.y() == doctest::Approx(-0.1));
  CHECK_THROWS_AS(env_step(s, Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("env_step: push slows the pusher and slides the box along its motion") {
  EnvState s;
  s.task = Task::kPush;
  s.agent = {0.0, -0.5};
  s.object = {0.0, -0.38};
  s.goal = {0.0, 0.4};
  env_step(s, Eigen::Vector2d(0.0, 1.0));
  CHECK(s.agent.y() == doctest::Approx(-0.5 + kPushDrag * kDt));
  CHECK(s.object.y() == doctest::Approx(s.agent.y() + kContactRadius));
  CHECK((s.object - s.agent).norm() == doctest::Approx(kContactRadius));

  // Moving away: full speed, box untouched.
  const Eigen::Vector2d box = s.object;
  env_step(s, Eigen::Vector2d(1.0, 0.0));
  CHECK(s.agent.x() == doctest::Approx(kDt));
  CHECK(s.object == box);
}

TEST_CASE("env_step: an off-centre push keeps its lateral offset") {
  EnvState s;
  s.task = Task::kPush;
  s.agent = {0.03, -0.5};
  s.object = {0.0, -0.41};
  s.goal = {0.0, 0.4};
  for (int i = 0; i < 5; ++i) env_step(s, Eigen::Vector2d(0.0, 1.0));
  CHECK(s.object.x() == doctest::Approx(0.0));
  CHECK(s.object.y() > -0.3);
  CHECK((s.object - s.agent).norm() == doctest::Approx(kContactRadius));
}

TEST_CASE("env_step: latch handle follows only after grabbing") {
  EnvState s;
  s.task = Task::kLatch;
  s.agent = {-0.5, 0.0};
  s.object = {-0.4, 0.2};
  s.handle_x0 = -0.4;
  s.goal = {0.0, 0.2};
  env_step(s, Eigen::Vector2d(1.0, 0.0));
  CHECK_FALSE(s.latched);
  CHECK(s.object.x() == doctest::Approx(-0.4));
}

TEST_CASE("scripted expert: reach moves toward the goal") {
  const auto s = reach_state({-0.5, 0.1}, {0.4, 0.1});
  CHECK(scripted_expert(s)[0] > 0.0);
  const auto t = reach_state({0.4, 0.5}, {0.4, -0.3});
  CHECK(scripted_expert(t)[1] < 0.0);
}

TEST_CASE("scripted expert: noise stays bounded and deterministic per rng") {
  const auto s = env_reset(Task::kPush, 4).state;
  std::mt19937_64 a(1), b(1);
  const auto x = scripted_expert(s, 0.05, &a);
  CHECK(x == scripted_expert(s, 0.05, &b));
  CHECK((x - scripted_expert(s)).cwiseAbs().maxCoeff() <= 0.05 + 1e-12);
}

TEST_CASE("scripted expert solves every task on 100 seeds") {
  for (int id = 0; id < kNumTasks; ++id) {
    int solved = 0;
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      bool success = false;
      mean += run_expert(task_from_id(id), seed, &success);
      solved += success ? 1 : 0;
    }
    mean /= 100.0;
    CAPTURE(id);
    CAPTURE(mean);
    CHECK(solved == 100);
    CHECK(mean < kMaxEpisodeSteps);
  }
}

TEST_CASE("run_expert_episode: finalized demo with chunk records") {
  const auto traj = run_expert_episode(Task::kLatch, 8, 4);
  CHECK(traj.success);
  CHECK(traj.source == TrajectorySource::kExpert);
  CHECK(traj.length == static_cast<int>(traj.steps.size()));
  CHECK(traj.chunks.size() == static_cast<std::size_t>((traj.length + 3) / 4));
}
