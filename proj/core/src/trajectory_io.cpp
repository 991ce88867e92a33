#include "chunkrl/trajectory_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "chunkrl/envs.hpp"
#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  if (!arr.is_array()) throw IoError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

}  // namespace

std::string trajectory_to_json_line(const Trajectory& traj, std::optional<int> ell_limit) {
  json j;
  j["task"] = std::string(task_name(task_from_id(traj.task_id)));
  j["task_id"] = traj.task_id;
  j["source"] = std::string(source_name(traj.source));
  j["success"] = traj.success;
  j["length"] = traj.length;
  if (ell_limit) j["ell_limit"] = *ell_limit;
  json states = json::array(), prompts = json::array(), actions = json::array();
  json rewards = json::array(), dones = json::array(), truncated = json::array();
  for (const auto& s : traj.steps) {
    states.push_back(vector_to_json(s.obs.state));
    prompts.push_back(s.obs.prompt_id);
    actions.push_back(vector_to_json(s.action));
    rewards.push_back(s.reward);
    dones.push_back(s.done);
    truncated.push_back(s.truncated);
  }
  j["states"] = std::move(states);
  j["prompts"] = std::move(prompts);
  j["actions"] = std::move(actions);
  j["rewards"] = std::move(rewards);
  j["dones"] = std::move(dones);
  j["truncated"] = std::move(truncated);
  return j.dump();
}

Trajectory trajectory_from_json_line(const std::string& line, int horizon, int* ell_limit) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed trajectory line: ") + e.what());
  }
  try {
    Trajectory t;
    t.task_id = j.at("task_id").get<int>();
    task_from_id(t.task_id);
    const std::string source = j.at("source").get<std::string>();
    if (source != "expert" && source != "self") throw IoError("unknown trajectory source " + source);
    t.source = source == "expert" ? TrajectorySource::kExpert : TrajectorySource::kSelf;
    t.success = j.at("success").get<bool>();
    t.length = j.at("length").get<int>();
    const json& states = j.at("states");
    const json& prompts = j.at("prompts");
    const json& actions = j.at("actions");
    const json& rewards = j.at("rewards");
    const json& dones = j.at("dones");
    const json& truncated = j.at("truncated");
    const std::size_t n = states.size();
    if (prompts.size() != n || actions.size() != n || rewards.size() != n || dones.size() != n ||
        truncated.size() != n) {
      throw IoError("trajectory step arrays differ in length");
    }
    if (static_cast<std::size_t>(t.length) != n) throw IoError("trajectory length does not match step count");
    t.steps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      StepRecord s;
      s.obs.state = vector_from_json(states[i]);
      s.obs.prompt_id = prompts[i].get<int>();
      s.action = vector_from_json(actions[i]);
      s.reward = rewards[i].get<double>();
      s.done = dones[i].get<bool>();
      s.truncated = truncated[i].get<bool>();
      t.steps.push_back(std::move(s));
    }
    t.chunks = slice_chunks(t.steps, horizon);
    if (ell_limit != nullptr && j.contains("ell_limit")) *ell_limit = j["ell_limit"].get<int>();
    return t;
  } catch (const json::exception& e) {
    throw IoError(std::string("invalid trajectory record: ") + e.what());
  }
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajs) {
  for (const auto& t : trajs) out << trajectory_to_json_line(t) << '\n';
  if (!out) throw IoError("failed writing trajectories");
}

std::vector<Trajectory> read_trajectories(std::istream& in, int horizon) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(trajectory_from_json_line(line, horizon));
  }
  return out;
}

void save_trajectories(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_trajectories(out, trajs);
}

std::vector<Trajectory> load_trajectories(const std::string& path, int horizon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_trajectories(in, horizon);
}

void write_buffer_snapshot(std::ostream& out, const DemoBuffer& buffer) {
  for (const auto& t : buffer.trajectories()) out << trajectory_to_json_line(t, buffer.ell_limit()) << '\n';
  if (!out) throw IoError("failed writing buffer snapshot");
}

DemoBuffer read_buffer_snapshot(std::istream& in, int horizon, const BufferOptions& options) {
  std::vector<Trajectory> stored;
  int limit = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int line_limit = -1;
    stored.push_back(trajectory_from_json_line(line, horizon, &line_limit));
    if (line_limit < 0) throw IoError("buffer snapshot line lacks ell_limit");
    if (limit >= 0 && line_limit != limit) throw IoError("inconsistent ell_limit across snapshot lines");
    limit = line_limit;
  }
  if (stored.empty()) throw IoError("empty buffer snapshot");
  return DemoBuffer::restore(std::move(stored), limit, options);
}

}  // namespace chunkrl
