// chunkrl: collect demonstrations, train, evaluate and export plot data.
//
// Log verbosity comes from CHUNKRL_LOG (quiet | info | debug; default info).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "chunkrl/config.hpp"
#include "chunkrl/envs.hpp"
#include "chunkrl/errors.hpp"
#include "chunkrl/metrics.hpp"
#include "chunkrl/plot_data.hpp"
#include "chunkrl/policy.hpp"
#include "chunkrl/rollout.hpp"
#include "chunkrl/trainer.hpp"
#include "chunkrl/trajectory_io.hpp"

namespace {

using namespace chunkrl;

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel log_level() {
  const char* env = std::getenv("CHUNKRL_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet") return LogLevel::kQuiet;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

bool info() { return log_level() != LogLevel::kQuiet; }
bool debug() { return log_level() == LogLevel::kDebug; }

Task require_task(const std::string& name) {
  auto t = parse_task(name);
  if (!t) throw ConfigError("unknown task '" + name + "' (sparse-reach, sparse-push, sparse-latch)");
  return *t;
}

int cmd_collect_demos(const std::string& task_name_arg, int n, std::uint64_t seed, int horizon, double noise,
                      const std::string& out_path) {
  const Task task = require_task(task_name_arg);
  std::vector<Trajectory> demos;
  for (int i = 0; i < n; ++i) {
    demos.push_back(run_expert_episode(task, seed + static_cast<std::uint64_t>(i), horizon, noise));
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path);
  write_trajectories(out, demos);
  if (n == 0) {
    std::cerr << "warning: n=0, wrote an empty demo file\n";
    return 0;
  }
  std::vector<int> lengths;
  int successes = 0;
  for (const auto& d : demos) {
    lengths.push_back(d.length);
    successes += d.success ? 1 : 0;
  }
  const double mean = std::accumulate(lengths.begin(), lengths.end(), 0.0) / n;
  std::cout << "successes " << successes << "/" << n << "  length mean " << mean << " min "
            << *std::min_element(lengths.begin(), lengths.end()) << " max "
            << *std::max_element(lengths.begin(), lengths.end()) << "\n";
  return successes == n ? 0 : 1;
}

int cmd_train(const std::string& config_path, const std::string& preset, const std::vector<std::string>& ablations,
              const std::vector<std::string>& overrides, std::uint64_t seed, const std::string& task,
              const std::string& out_dir) {
  TrainConfig base = preset == "paper" ? TrainConfig::paper_preset() : TrainConfig{};
  TrainConfig config = config_path.empty() ? base : load_config(config_path, base);
  apply_overrides(config, overrides);
  for (const auto& a : ablations) apply_ablation(config, a);
  config.seed = seed;
  if (!task.empty()) config.task = require_task(task);
  config.validate();

  std::filesystem::create_directories(out_dir);
  const std::string resolved = serialize_config(config);
  {
    std::ofstream echo(out_dir + "/config.txt", std::ios::trunc);
    echo << resolved;
  }
  if (info()) std::cout << "# resolved config\n" << resolved << std::flush;

  std::ofstream csv(out_dir + "/metrics.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot write " + out_dir + "/metrics.csv");
  csv << kMetricsCsvHeader << '\n';

  TrainHooks hooks;
  hooks.divergence_snapshot_path = out_dir + "/diverged_checkpoint.bin";
  hooks.on_update = [&](const UpdateLog& row) {
    csv << metrics_csv_row(row) << '\n';
    csv.flush();
    if (row.eval && info()) {
      std::cout << "update " << row.update_idx << " steps " << row.optimizer_steps << " env " << row.env_steps
                << " beta " << row.beta << " buffer " << row.buffer_size << " acc " << row.eval->acc << " len_p10 "
                << format_metric(row.eval->len_p10) << " avg10 " << format_metric(row.eval->avg_shortest10) << "\n";
    }
    if (debug()) {
      std::cout << "  update " << row.update_idx << " ppo " << row.ppo_loss << " bc " << row.bc_loss << " value "
                << row.value_loss << " episodes " << row.episodes_finished << " successes " << row.rollout_successes
                << " admitted " << row.admitted << " rejected " << row.rejected << " min_len "
                << row.buffer_min_length << "\n";
    }
  };

  TrainResult result;
  try {
    result = train(config, hooks);
  } catch (const TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << "\n  snapshot: " << hooks.divergence_snapshot_path << "\n";
    return 3;
  }

  {
    std::ofstream ckpt(out_dir + "/checkpoint.bin", std::ios::binary | std::ios::trunc);
    write_checkpoint(ckpt, result.policy, result.critic);
  }
  {
    std::ofstream report(out_dir + "/final_eval.json", std::ios::trunc);
    report << eval_report_json(result.final_eval) << '\n';
  }
  if (result.buffer) {
    std::ofstream snap(out_dir + "/buffer.jsonl", std::ios::binary | std::ios::trunc);
    write_buffer_snapshot(snap, *result.buffer);
  }
  if (info()) {
    std::cout << "final acc " << result.final_eval.acc << " len_p10 " << format_metric(result.final_eval.len_p10)
              << " avg10 " << format_metric(result.final_eval.avg_shortest10) << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& task, int episodes, std::uint64_t seed,
             const std::string& out_path) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + checkpoint);
  auto [policy, critic] = read_checkpoint(in);
  const EvalReport report = evaluate(policy, require_task(task), episodes, seed);
  const std::string json = eval_report_json(report);
  if (out_path.empty()) {
    std::cout << json << '\n';
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + out_path);
    out << json << '\n';
  }
  return 0;
}

int cmd_plot_data(const std::string& metrics_path, const std::string& out_path, int window) {
  std::ifstream in(metrics_path);
  if (!in) throw IoError("cannot open " + metrics_path);
  const std::vector<EvalPoint> points = read_eval_points(in);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + out_path);
  write_plot_data(out, points, window);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-chunked PPO with self behaviour cloning on sparse toy manipulation tasks"};
  app.require_subcommand(1);

  auto* collect = app.add_subcommand("collect-demos", "Record scripted-expert demonstrations as JSON lines");
  std::string c_task, c_out;
  int c_n = 10, c_horizon = 4;
  std::uint64_t c_seed = 0;
  double c_noise = 0.0;
  collect->add_option("--task", c_task, "sparse-reach | sparse-push | sparse-latch")->required();
  collect->add_option("--n", c_n, "number of episodes")->check(CLI::NonNegativeNumber);
  collect->add_option("--seed", c_seed, "seed of the first episode")->required();
  collect->add_option("--horizon", c_horizon, "chunk horizon used for slicing")->check(CLI::PositiveNumber);
  collect->add_option("--noise", c_noise, "uniform action noise amplitude")->check(CLI::NonNegativeNumber);
  collect->add_option("--out", c_out, "output .jsonl path")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a policy; writes checkpoint, metrics CSV and final eval");
  std::string t_config, t_preset = "desk", t_task, t_out = "run";
  std::vector<std::string> t_ablations, t_overrides;
  std::uint64_t t_seed = 0;
  train_cmd->add_option("--config", t_config, "flat key=value config file");
  train_cmd->add_option("--preset", t_preset, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--ablation", t_ablations, "chunking_off | buffer_frozen | buffer_unfiltered | fixed_beta_1to1");
  train_cmd->add_option("--set", t_overrides, "key=value override (repeatable)");
  train_cmd->add_option("--seed", t_seed, "run seed")->required();
  train_cmd->add_option("--task", t_task, "task override");
  train_cmd->add_option("--out-dir", t_out, "output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with the deterministic mean policy");
  std::string e_ckpt, e_task, e_out;
  int e_episodes = 128;
  std::uint64_t e_seed = 0;
  eval_cmd->add_option("--checkpoint", e_ckpt, "checkpoint.bin from train")->required();
  eval_cmd->add_option("--task", e_task, "task")->required();
  eval_cmd->add_option("--episodes", e_episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", e_seed, "first episode seed")->required();
  eval_cmd->add_option("--out", e_out, "write JSON here instead of stdout");

  auto* plot = app.add_subcommand("plot-data", "Smooth the evaluation success curve of a metrics CSV");
  std::string p_metrics, p_out;
  int p_window = kDefaultSmoothingWindow;
  plot->add_option("--metrics", p_metrics, "metrics.csv from train")->required();
  plot->add_option("--out", p_out, "output CSV")->required();
  plot->add_option("--window", p_window, "moving-average window (evaluations)")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*collect) return cmd_collect_demos(c_task, c_n, c_seed, c_horizon, c_noise, c_out);
    if (*train_cmd) return cmd_train(t_config, t_preset, t_ablations, t_overrides, t_seed, t_task, t_out);
    if (*eval_cmd) return cmd_eval(e_ckpt, e_task, e_episodes, e_seed, e_out);
    if (*plot) return cmd_plot_data(p_metrics, p_out, p_window);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
