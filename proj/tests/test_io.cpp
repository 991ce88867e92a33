#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "chunkrl/errors.hpp"
#include "chunkrl/rollout.hpp"
#include "chunkrl/trajectory_io.hpp"
#include "support.hpp"

using namespace chunkrl;

TEST_CASE("trajectory json line round trip") {
  const auto traj = run_expert_episode(Task::kPush, 3, 4, 0.05);
  const auto line = trajectory_to_json_line(traj, 77);
  int limit = 0;
  const auto back = trajectory_from_json_line(line, 4, &limit);
  CHECK(limit == 77);
  CHECK(back.task_id == traj.task_id);
  CHECK(back.source == traj.source);
  CHECK(back.success == traj.success);
  CHECK(back.length == traj.length);
  REQUIRE(back.steps.size() == traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    CHECK(back.steps[i].obs.state == traj.steps[i].obs.state);
    CHECK(back.steps[i].action == traj.steps[i].action);
    CHECK(back.steps[i].done == traj.steps[i].done);
  }
  REQUIRE(back.chunks.size() == traj.chunks.size());
  CHECK(back.chunks.back().chunk.actions == traj.chunks.back().chunk.actions);

  // Re-slicing with another horizon.
  CHECK(trajectory_from_json_line(line, 1).chunks.size() == traj.steps.size());
}

TEST_CASE("trajectory reader rejects malformed lines") {
  CHECK_THROWS_AS(trajectory_from_json_line("{not json", 4), IoError);
  CHECK_THROWS_AS(trajectory_from_json_line(R"({"task_id":0})", 4), IoError);
}

TEST_CASE("trajectory files and buffer snapshots round trip") {
  std::vector<Trajectory> trajs;
  for (std::uint64_t s = 0; s < 3; ++s) trajs.push_back(run_expert_episode(Task::kReach, s, 4));
  const auto path = std::filesystem::temp_directory_path() / "chunkrl_test_trajs.jsonl";
  save_trajectories(path.string(), trajs);
  const auto loaded = load_trajectories(path.string(), 4);
  std::filesystem::remove(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[2].length == trajs[2].length);

  const auto buffer = init_buffer(trajs, 8);
  std::stringstream snap;
  write_buffer_snapshot(snap, buffer);
  BufferOptions options;
  options.capacity = 8;
  const auto restored = read_buffer_snapshot(snap, 4, options);
  CHECK(restored.size() == buffer.size());
  CHECK(restored.ell_limit() == buffer.ell_limit());
  CHECK(restored.record_count() == buffer.record_count());

  CHECK_THROWS_AS(load_trajectories("/nonexistent/dir/x.jsonl", 4), IoError);
}
