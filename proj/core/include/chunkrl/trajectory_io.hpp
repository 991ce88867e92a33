#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chunkrl/demo_buffer.hpp"

namespace chunkrl {

// JSON-lines trajectory format, one episode per line:
//
//   {"task":"sparse-push","task_id":1,"source":"expert","success":true,
//    "length":35,"states":[[...],...],"prompts":[1,...],"actions":[[...],...],
//    "rewards":[...],"dones":[...],"truncated":[...]}
//
// Buffer snapshots add "ell_limit" to every line. Chunk records are not
// stored; readers re-slice the steps with the caller's horizon.
std::string trajectory_to_json_line(const Trajectory& traj, std::optional<int> ell_limit = std::nullopt);
Trajectory trajectory_from_json_line(const std::string& line, int horizon, int* ell_limit = nullptr);

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> read_trajectories(std::istream& in, int horizon);

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> load_trajectories(const std::string& path, int horizon);

void write_buffer_snapshot(std::ostream& out, const DemoBuffer& buffer);
DemoBuffer read_buffer_snapshot(std::istream& in, int horizon, const BufferOptions& options);

}  // namespace chunkrl
