// Acceptance suite: one PASS/FAIL line per criterion.
//   chunkrl_acceptance [--cli PATH] [--only 1,2,...]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/metrics.hpp"
#include "chunkrl/ppo.hpp"
#include "chunkrl/trainer.hpp"
#include "support.hpp"

using namespace chunkrl;
using chunkrl::testing::flatten;
using chunkrl::testing::numeric_gradient;
using chunkrl::testing::param_refs;
using chunkrl::testing::random_observation;
using chunkrl::testing::random_vector;
using chunkrl::testing::relative_error;
using chunkrl::testing::synthetic_trajectory;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

const PolicyShape kShape{kObsDim, kNumTasks, 4, kActionDim};

ChunkPolicy perturbed_policy(std::mt19937_64& rng) {
  auto policy = make_chunk_policy(kShape, {16, 16}, -0.5, rng);
  for (auto& layer : policy.net.layers) layer.bias = random_vector(layer.out_dim(), rng, 0.2);
  policy.log_std = random_vector(kShape.chunk_dim(), rng, 0.3);
  return policy;
}

std::vector<double*> log_std_refs(ChunkPolicy& policy) {
  std::vector<double*> refs;
  for (Eigen::Index i = 0; i < policy.log_std.size(); ++i) refs.push_back(policy.log_std.data() + i);
  return refs;
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

// ---- 1 ----------------------------------------------------------------------

Verdict gradient_correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::map<std::string, double> worst;
  const int instances = 50;

  for (int i = 0; i < instances; ++i) {
    auto net = make_mlp({6, 12, 9, 3}, rng);
    for (auto& layer : net.layers) layer.bias = random_vector(layer.out_dim(), rng, 0.3);
    const Eigen::VectorXd x = random_vector(6, rng);
    const Eigen::VectorXd u = random_vector(3, rng);
    const auto analytic = mlp_backward(net, x, u);
    const auto numeric = numeric_gradient(param_refs(net), [&] { return u.dot(mlp_forward(net, x)); });
    worst["mlp_forward"] = std::max(worst["mlp_forward"], relative_error(flatten(analytic), numeric));
  }

  for (int i = 0; i < instances; ++i) {
    auto policy = perturbed_policy(rng);
    const auto obs = random_observation(kShape, rng);
    const ActionChunk chunk(random_vector(kShape.chunk_dim(), rng), 4, 2);
    const std::vector<Observation> obs_v{obs};
    const std::vector<ActionChunk> chunk_v{chunk};
    const auto grad = log_prob_gradient(policy, evaluate_log_probs(policy, obs_v, chunk_v), Eigen::VectorXd::Ones(1));
    auto f = [&] { return chunk_log_prob(policy, obs, chunk); };
    const auto numeric = concat(numeric_gradient(param_refs(policy.net), f), numeric_gradient(log_std_refs(policy), f));
    worst["chunk_log_prob"] =
        std::max(worst["chunk_log_prob"], relative_error(concat(flatten(grad.net), grad.log_std), numeric));
  }

  for (int i = 0; i < instances; ++i) {
    auto policy = perturbed_policy(rng);
    std::vector<ChunkRecord> batch;
    for (int j = 0; j < 8; ++j) batch.push_back({random_observation(kShape, rng), ActionChunk(random_vector(8, rng), 4, 2)});
    const auto analytic = bc_loss_and_grad(policy, batch);
    auto f = [&] { return bc_loss(policy, batch); };
    const auto numeric = concat(numeric_gradient(param_refs(policy.net), f), numeric_gradient(log_std_refs(policy), f));
    worst["bc_loss"] = std::max(worst["bc_loss"], relative_error(concat(flatten(analytic.grad.net), analytic.grad.log_std), numeric));
  }

  // Mean clipped surrogate of a small batch, differentiated through the policy.
  for (int i = 0; i < instances;) {
    auto policy = perturbed_policy(rng);
    std::vector<Observation> obs;
    std::vector<ActionChunk> chunks;
    std::vector<double> old_lp, adv;
    std::normal_distribution<double> shift(0.0, 0.3);
    for (int j = 0; j < 6; ++j) {
      obs.push_back(random_observation(kShape, rng));
      chunks.emplace_back(random_vector(8, rng), 4, 2);
      old_lp.push_back(chunk_log_prob(policy, obs.back(), chunks.back()) + shift(rng));
      adv.push_back(shift(rng) * 3.0);
    }
    const auto batch = evaluate_log_probs(policy, obs, chunks);
    bool near_kink = false;
    Eigen::VectorXd coeffs(6);
    for (int j = 0; j < 6; ++j) {
      const double r = std::exp(batch.log_probs[j] - old_lp[static_cast<std::size_t>(j)]);
      near_kink = near_kink || std::abs(r - 1.2) < 1e-3 || std::abs(r - 0.8) < 1e-3;
      coeffs[j] = ppo_surrogate_term(batch.log_probs[j], old_lp[static_cast<std::size_t>(j)], adv[static_cast<std::size_t>(j)], 0.2).d_new_log_prob / 6.0;
    }
    if (near_kink) continue;
    const auto grad = log_prob_gradient(policy, batch, coeffs);
    auto f = [&] {
      double total = 0.0;
      for (std::size_t j = 0; j < 6; ++j) total += ppo_surrogate(chunk_log_prob(policy, obs[j], chunks[j]), old_lp[j], adv[j], 0.2);
      return total / 6.0;
    };
    const auto numeric = concat(numeric_gradient(param_refs(policy.net), f), numeric_gradient(log_std_refs(policy), f));
    worst["ppo_surrogate"] = std::max(worst["ppo_surrogate"], relative_error(concat(flatten(grad.net), grad.log_std), numeric));
    ++i;
  }

  for (int i = 0; i < instances;) {
    auto critic = make_value_head(kShape, {16, 16}, rng);
    std::vector<Observation> obs;
    std::vector<double> v_old, target;
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int j = 0; j < 6; ++j) obs.push_back(random_observation(kShape, rng));
    const auto batch = evaluate_values(critic, obs);
    bool near_kink = false;
    Eigen::VectorXd coeffs(6);
    for (int j = 0; j < 6; ++j) {
      v_old.push_back(batch.values[j] + u(rng));
      target.push_back(batch.values[j] + 2.0 * u(rng));
      near_kink = near_kink || std::abs(std::abs(batch.values[j] - v_old.back()) - 0.2) < 1e-4;
      coeffs[j] = clipped_value_loss_term(batch.values[j], v_old.back(), target.back(), 0.2).d_v_new / 6.0;
    }
    if (near_kink) continue;
    const auto grad = value_gradient(critic, batch, coeffs);
    auto f = [&] {
      double total = 0.0;
      for (std::size_t j = 0; j < 6; ++j) total += clipped_value_loss(value_estimate(critic, obs[j]), v_old[j], target[j], 0.2);
      return total / 6.0;
    };
    worst["clipped_value_loss"] =
        std::max(worst["clipped_value_loss"], relative_error(flatten(grad), numeric_gradient(param_refs(critic.net), f)));
    ++i;
  }

  const double elapsed = seconds_since(start);
  bool pass = elapsed < 10.0;
  std::string detail;
  for (const auto& [name, err] : worst) {
    pass = pass && err < 1e-4;
    detail += name + " " + fmt(err, 2) + "; ";
  }
  return {pass, "max rel err: " + detail + "time " + fmt(elapsed, 3) + " s"};
}

// ---- 2 ----------------------------------------------------------------------

Verdict gae_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution done_flag(0.15), cut_flag(0.05);
  const double gm = std::pow(0.99, 4), lam = 0.95;
  double worst = 0.0;
  for (int seg_i = 0; seg_i < 100; ++seg_i) {
    std::vector<MacroTransition> seg(20);
    for (auto& t : seg) {
      t.done = done_flag(rng);
      t.truncated = !t.done && cut_flag(rng);
      t.reward_agg = u(rng);
      t.value_old = u(rng);
      t.next_value_old = t.done ? 0.0 : u(rng);
    }
    const auto est = compute_gae(seg, gm, lam);
    for (std::size_t t = 0; t < seg.size(); ++t) {
      double oracle = 0.0, w = 1.0;
      for (std::size_t k = t; k < seg.size(); ++k) {
        const double delta = seg[k].reward_agg + gm * seg[k].next_value_old * (seg[k].done ? 0.0 : 1.0) - seg[k].value_old;
        oracle += w * delta;
        if (seg[k].done || seg[k].truncated) break;
        w *= gm * lam;
      }
      worst = std::max(worst, std::abs(est[t].advantage - oracle));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && elapsed < 1.0, "max abs diff " + fmt(worst, 3) + ", time " + fmt(elapsed, 3) + " s"};
}

// ---- 3 ----------------------------------------------------------------------

Verdict schedule_exactness() {
  const long long warmup = 2000;
  bool pass = beta_schedule(0, warmup) == 0.0;
  const double at_warmup = beta_schedule(warmup, warmup);
  pass = pass && std::abs(at_warmup - 0.761594) <= 1e-6;
  double prev = -1.0;
  for (long long t = 0; t <= 10 * warmup; ++t) {
    const double b = beta_schedule(t, warmup);
    pass = pass && b >= prev;
    prev = b;
  }
  return {pass, "beta(0)=" + fmt(beta_schedule(0, warmup)) + " beta(T)=" + fmt(at_warmup, 9) +
                    " beta(10T)=" + fmt(prev, 12)};
}

// ---- 4 ----------------------------------------------------------------------

Verdict clip_dead_zone() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> mag(0.05, 3.0), past(0.01, 1.0), nudge(-1.0, 1.0);
  const double eps = 0.2;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double old_lp = nudge(rng);
    // A > 0 with r above 1 + eps.
    const double a_pos = mag(rng);
    const double lp_hi = old_lp + std::log(1.0 + eps) + past(rng);
    const double base_hi = ppo_surrogate(lp_hi, old_lp, a_pos, eps);
    const double moved_hi = ppo_surrogate(lp_hi + 0.005 * past(rng), old_lp, a_pos, eps);
    worst = std::max(worst, std::abs(moved_hi - base_hi));
    // A < 0 with r below 1 - eps.
    const double a_neg = -mag(rng);
    const double lp_lo = old_lp + std::log(1.0 - eps) - past(rng);
    const double base_lo = ppo_surrogate(lp_lo, old_lp, a_neg, eps);
    const double moved_lo = ppo_surrogate(lp_lo - 0.005 * past(rng), old_lp, a_neg, eps);
    worst = std::max(worst, std::abs(moved_lo - base_lo));
    worst = std::max(worst, std::abs(ppo_surrogate_term(lp_hi, old_lp, a_pos, eps).d_new_log_prob));
    worst = std::max(worst, std::abs(ppo_surrogate_term(lp_lo, old_lp, a_neg, eps).d_new_log_prob));
  }
  return {worst <= 1e-12, "max change " + fmt(worst, 3)};
}

// ---- 5 ----------------------------------------------------------------------

Verdict buffer_safety() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> cap_dist(1, 10), len_dist(1, 200), n_ops(1, 50);
  std::bernoulli_distribution success(0.6);
  long long violations = 0, admissions = 0, evictions = 0;
  for (int sequence = 0; sequence < 10000; ++sequence) {
    const int capacity = cap_dist(rng);
    std::uniform_int_distribution<int> n_experts(1, capacity);
    std::vector<Trajectory> experts;
    const int ne = n_experts(rng);
    for (int i = 0; i < ne; ++i) experts.push_back(synthetic_trajectory(len_dist(rng), true, 4, 1));
    auto buffer = init_buffer(std::move(experts), capacity);
    const int limit = buffer.ell_limit();
    const int ops = n_ops(rng);
    for (int k = 0; k < ops; ++k) {
      const std::size_t before = buffer.size();
      if (try_admit(buffer, synthetic_trajectory(len_dist(rng), success(rng), 4, 1))) {
        ++admissions;
        if (before == buffer.size()) ++evictions;
      }
      if (buffer.size() > static_cast<std::size_t>(capacity) || buffer.ell_limit() != limit) ++violations;
      for (const auto& t : buffer.trajectories()) {
        if (!t.success || t.length > limit) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(violations) + " violations over 10000 sequences (" +
                               std::to_string(admissions) + " admissions, " + std::to_string(evictions) +
                               " evictions)"};
}

// ---- 6 ----------------------------------------------------------------------

Verdict metric_definitions() {
  std::vector<int> hundred(100), twenty(20);
  for (int i = 0; i < 100; ++i) hundred[static_cast<std::size_t>(i)] = i + 1;
  for (int i = 0; i < 20; ++i) twenty[static_cast<std::size_t>(i)] = i + 1;
  bool pass = metric_len_p10(hundred) == 10.0 && metric_avg_shortest10(twenty) == 1.5;

  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> size(1, 500), len(1, 200);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> v(static_cast<std::size_t>(size(rng)));
    for (auto& x : v) x = len(rng);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const auto rank = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n)));
    const std::size_t k = std::max<std::size_t>(1, rank);
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += sorted[i];
    mean /= static_cast<double>(k);
    if (*metric_len_p10(v) != sorted[rank - 1]) ++mismatches;
    if (std::abs(*metric_avg_shortest10(v) - mean) > 1e-12 * mean) ++mismatches;
  }
  pass = pass && mismatches == 0;
  return {pass, "p10([1..100])=" + fmt(*metric_len_p10(hundred)) + " avg10([1..20])=" +
                    fmt(*metric_avg_shortest10(twenty)) + ", " + std::to_string(mismatches) +
                    " oracle mismatches"};
}

// ---- training runs shared by 7-9 ----------------------------------------------

constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr std::int64_t kPushSteps = 40000;

struct RunKey {
  Task task;
  std::string variant;
  std::uint64_t seed;
  bool operator<(const RunKey& o) const {
    return std::tie(task, variant, seed) < std::tie(o.task, o.variant, o.seed);
  }
};

struct RunOutcome {
  EvalReport eval;
  double seconds = 0.0;
};

class RunCache {
 public:
  const RunOutcome& get(Task task, const std::string& variant, std::uint64_t seed) {
    const RunKey key{task, variant, seed};
    if (auto it = runs_.find(key); it != runs_.end()) return it->second;
    TrainConfig config;
    config.seed = seed;
    config.task = task;
    if (task == Task::kPush) config.total_steps = kPushSteps;
    if (variant == "bc_only") {
      config.mode = TrainMode::kBcOnly;
    } else if (variant == "ppo") {
      config.mode = TrainMode::kPpo;
    } else if (variant != "full") {
      apply_ablation(config, variant);
    }
    const auto start = Clock::now();
    auto result = train(config);
    RunOutcome outcome{std::move(result.final_eval), seconds_since(start)};
    std::cout << "  run " << task_name(task) << " " << variant << " seed " << seed << ": acc "
              << fmt(outcome.eval.acc) << " avg10 " << format_metric(outcome.eval.avg_shortest10) << " ("
              << fmt(outcome.seconds, 3) << " s)\n"
              << std::flush;
    return runs_.emplace(key, std::move(outcome)).first->second;
  }

  double mean_acc(Task task, const std::string& variant) {
    double total = 0.0;
    for (auto seed : kSeeds) total += get(task, variant, seed).eval.acc;
    return total / 3.0;
  }

  double slowest() const {
    double worst = 0.0;
    for (const auto& [key, run] : runs_) worst = std::max(worst, run.seconds);
    return worst;
  }

 private:
  std::map<RunKey, RunOutcome> runs_;
};

// ---- 7 ----------------------------------------------------------------------

Verdict trend_reproduction(RunCache& runs) {
  bool pass = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const double full = runs.get(Task::kReach, "full", seed).eval.acc;
    const double bc = runs.get(Task::kReach, "bc_only", seed).eval.acc;
    pass = pass && full >= 0.90 && bc < full;
    detail += "reach s" + std::to_string(seed) + " full " + fmt(full, 3) + " bc " + fmt(bc, 3) + "; ";
  }
  for (auto seed : kSeeds) {
    const double full = runs.get(Task::kPush, "full", seed).eval.acc;
    const double ppo = runs.get(Task::kPush, "ppo", seed).eval.acc;
    pass = pass && full >= 0.6 && ppo <= 0.2;
    detail += "push s" + std::to_string(seed) + " full " + fmt(full, 3) + " ppo " + fmt(ppo, 3) + "; ";
  }
  pass = pass && runs.slowest() < 300.0;
  return {pass, detail + "slowest run " + fmt(runs.slowest(), 3) + " s"};
}

// ---- 8 ----------------------------------------------------------------------

Verdict shorter_than_expert(RunCache& runs) {
  const TrainConfig defaults;
  const auto expert = evaluate_expert(Task::kPush, defaults.eval_episodes, defaults.eval_seed);
  double expert_mean = 0.0;
  for (int len : expert.lengths) expert_mean += len;
  expert_mean /= static_cast<double>(expert.lengths.size());
  int shorter = 0;
  std::string detail = "push expert mean " + fmt(expert_mean) + "; ";
  for (auto seed : kSeeds) {
    const auto& eval = runs.get(Task::kPush, "full", seed).eval;
    const bool ok = eval.avg_shortest10.has_value() && *eval.avg_shortest10 < expert_mean;
    shorter += ok ? 1 : 0;
    detail += "s" + std::to_string(seed) + " avg10 " + format_metric(eval.avg_shortest10) + "; ";
  }
  return {shorter >= 2, detail + std::to_string(shorter) + "/3 shorter"};
}

// ---- 9 ----------------------------------------------------------------------

Verdict ablation_ordering(RunCache& runs) {
  const double full = runs.mean_acc(Task::kPush, "full");
  const double no_chunk = runs.mean_acc(Task::kPush, "chunking_off");
  const double unfiltered = runs.mean_acc(Task::kPush, "buffer_unfiltered");
  const double frozen = runs.mean_acc(Task::kPush, "buffer_frozen");
  const double bc = runs.mean_acc(Task::kPush, "bc_only");
  const bool pass = no_chunk < full && unfiltered < full && (frozen - bc) < (full - bc);
  return {pass, "3-seed mean acc: full " + fmt(full) + ", chunking_off " + fmt(no_chunk) + ", buffer_unfiltered " +
                    fmt(unfiltered) + ", buffer_frozen " + fmt(frozen) + ", bc_only " + fmt(bc)};
}

// ---- 10 ---------------------------------------------------------------------

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict reproducibility(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  const auto root = std::filesystem::temp_directory_path() / "chunkrl_acceptance_repro";
  std::filesystem::remove_all(root);
  std::string csv[2];
  for (int i = 0; i < 2; ++i) {
    const auto dir = root / ("run" + std::to_string(i));
    const std::string cmd = "CHUNKRL_LOG=quiet \"" + cli + "\" train --seed 17 --task sparse-push --set total_steps=4000 --out-dir \"" +
                            dir.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "train command failed: " + cmd};
    csv[i] = slurp(dir / "metrics.csv");
  }
  const bool pass = !csv[0].empty() && csv[0] == csv[1];
  const auto bytes = csv[0].size();
  std::filesystem::remove_all(root);
  return {pass, "metrics.csv " + std::to_string(bytes) + " bytes, " + (pass ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chunkrl acceptance suite"};
  std::string cli;
  std::vector<int> only;
  app.add_option("--cli", cli, "path to the chunkrl executable");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  RunCache runs;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"GAE oracle equivalence", gae_oracle},
      {"schedule exactness", schedule_exactness},
      {"clip dead zone", clip_dead_zone},
      {"buffer safety", buffer_safety},
      {"metric definitions", metric_definitions},
      {"end-to-end trends", [&] { return trend_reproduction(runs); }},
      {"shorter than expert", [&] { return shorter_than_expert(runs); }},
      {"ablation ordering", [&] { return ablation_ordering(runs); }},
      {"reproducibility", [&] { return reproducibility(cli); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << v.detail
              << "\n"
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
