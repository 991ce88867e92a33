#include "chunkrl/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "chunkrl/errors.hpp"
#include "chunkrl/rollout.hpp"
#include "chunkrl/trajectory_io.hpp"

namespace chunkrl {
namespace {

// splitmix64 finalizer; decorrelates the per-purpose random streams.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t run_seed, std::uint64_t stream) {
  return mix(mix(run_seed) ^ (stream * 0xD1B54A32D192ED03ULL));
}

// Evaluation uses small consecutive seeds; training episodes draw from a
// disjoint high range.
constexpr std::uint64_t kDemoSeedBase = 1ULL << 40;
constexpr std::uint64_t kTrainSeedBase = 1ULL << 41;

double grad_norm_sq(const PolicyGrad& g) {
  double s = g.log_std.squaredNorm();
  for (const auto& layer : g.net.layers) s += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return s;
}

void accumulate(PolicyGrad& into, const PolicyGrad& from) {
  if (into.net.layers.empty()) {
    into = from;
    return;
  }
  into.net += from.net;
  into.log_std += from.log_std;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Learner::Learner(ChunkPolicy policy, ValueHead critic, const TrainConfig& config)
    : policy_(std::move(policy)), critic_(std::move(critic)), config_(config) {}

double Learner::current_beta() const {
  switch (config_.mode) {
    case TrainMode::kBcOnly:
      return 0.0;
    case TrainMode::kPpo:
      return 1.0;
    case TrainMode::kFull:
      break;
  }
  if (config_.ablations.fixed_beta_1to1) return 1.0;
  return beta_schedule(steps_, config_.warmup_steps);
}

MinibatchStats Learner::update(std::span<const MacroTransition> transitions,
                               std::span<const AdvantageEstimate> advantages,
                               std::span<const ChunkRecord> bc_batch) {
  if (transitions.size() != advantages.size()) throw ShapeError("transitions and advantages differ in size");
  MinibatchStats stats;
  stats.beta = current_beta();

  PolicyGrad actor_grad;
  std::optional<GradBundle> critic_grad;

  if (!transitions.empty()) {
    std::vector<Observation> obs;
    std::vector<ActionChunk> chunks;
    obs.reserve(transitions.size());
    chunks.reserve(transitions.size());
    for (const auto& tr : transitions) {
      obs.push_back(tr.obs);
      chunks.push_back(tr.chunk);
    }

    // Actor: beta * (-mean surrogate)
    const LogProbBatch lp = evaluate_log_probs(policy_, obs, chunks);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(lp.log_probs.size());
    double surrogate_sum = 0.0;
    int counted = 0;
    std::vector<SurrogateTerm> terms(transitions.size());
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      terms[j] = ppo_surrogate_term(lp.log_probs[static_cast<Eigen::Index>(j)], transitions[j].old_log_prob,
                                    advantages[j].advantage, config_.epsilon);
      if (terms[j].finite) {
        surrogate_sum += terms[j].value;
        ++counted;
      } else {
        ++stats.excluded_ratios;
      }
    }
    if (counted > 0) {
      stats.ppo_loss = -surrogate_sum / counted;
      for (std::size_t j = 0; j < transitions.size(); ++j) {
        if (terms[j].finite) coeffs[static_cast<Eigen::Index>(j)] = -stats.beta * terms[j].d_new_log_prob / counted;
      }
      if (stats.beta != 0.0) {
        PolicyGrad g = log_prob_gradient(policy_, lp, coeffs);
        stats.ppo_grad_norm = std::sqrt(grad_norm_sq(g));
        accumulate(actor_grad, g);
      }
    }

    // Critic: value_weight * mean clipped value loss
    const ValueBatch vb = evaluate_values(critic_, obs);
    Eigen::VectorXd vcoeffs(vb.values.size());
    double vloss = 0.0;
    const double n = static_cast<double>(transitions.size());
    for (std::size_t j = 0; j < transitions.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const ValueLossTerm term = clipped_value_loss_term(vb.values[jj], transitions[j].value_old,
                                                         advantages[j].return_target, config_.value_clip);
      vloss += term.value;
      vcoeffs[jj] = config_.value_weight * term.d_v_new / n;
    }
    stats.value_loss = vloss / n;
    critic_grad = value_gradient(critic_, vb, vcoeffs);
  }

  if (!bc_batch.empty()) {
    BcLossGrad bc = bc_loss_and_grad(policy_, bc_batch);
    stats.bc_loss = bc.loss;
    stats.bc_grad_norm = std::sqrt(grad_norm_sq(bc.grad));
    accumulate(actor_grad, bc.grad);
  }

  stats.entropy = policy_entropy(policy_);
  if (config_.entropy_weight != 0.0) {
    PolicyGrad ent;
    ent.net = GradBundle::zeros_like(policy_.net);
    ent.log_std = Eigen::VectorXd::Constant(policy_.log_std.size(), -config_.entropy_weight);
    accumulate(actor_grad, ent);
  }

  stats.total_loss = combined_loss(-stats.ppo_loss, stats.bc_loss, stats.value_loss, stats.entropy, stats.beta,
                                   {config_.value_weight, config_.entropy_weight});
  if (!std::isfinite(stats.total_loss)) {
    throw TrainingDiverged("non-finite loss at optimizer step " + std::to_string(steps_));
  }

  try {
    if (!actor_grad.net.layers.empty()) {
      std::vector<ParamSlot> slots;
      append_slots(policy_.net, actor_grad.net, slots);
      slots.push_back({{policy_.log_std.data(), static_cast<std::size_t>(policy_.log_std.size())},
                       {actor_grad.log_std.data(), static_cast<std::size_t>(actor_grad.log_std.size())}});
      adamw_step(slots, actor_state_, config_.optimizer);
      policy_.clamp_log_std();
    }
    if (critic_grad) adamw_step(critic_.net, *critic_grad, critic_state_, config_.optimizer);
  } catch (const NonFiniteError& e) {
    throw TrainingDiverged(std::string(e.what()) + " at optimizer step " + std::to_string(steps_));
  }
  ++steps_;
  return stats;
}

std::uint64_t demo_episode_seed(std::uint64_t run_seed, int index) {
  return kDemoSeedBase + (run_seed % (1ULL << 20)) * (1ULL << 16) + static_cast<std::uint64_t>(index);
}

std::vector<Trajectory> seed_demonstrations(const TrainConfig& config) {
  const int h = config.effective_horizon();
  if (!config.demo_path.empty()) {
    std::vector<Trajectory> demos = load_trajectories(config.demo_path, h);
    for (const auto& d : demos) {
      if (d.task_id != static_cast<int>(config.task)) throw ConfigError("demo file holds another task's episodes");
    }
    if (config.n_demos > 0 && demos.size() > static_cast<std::size_t>(config.n_demos)) {
      demos.resize(static_cast<std::size_t>(config.n_demos));
    }
    return demos;
  }
  std::vector<Trajectory> demos;
  // Noisy experts may occasionally fail; skip those seeds.
  for (int i = 0; static_cast<int>(demos.size()) < config.n_demos; ++i) {
    if (i > 100 * config.n_demos + 100) throw ConfigError("scripted expert keeps failing; lower demo_noise");
    Trajectory t = run_expert_episode(config.task, demo_episode_seed(config.seed, i), h, config.demo_noise);
    if (t.success) demos.push_back(std::move(t));
  }
  return demos;
}

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  const int h = config.effective_horizon();
  const PolicyShape shape{kObsDim, kNumTasks, h, kActionDim};

  std::mt19937_64 init_rng(stream_seed(config.seed, 1));
  std::mt19937_64 rollout_rng(stream_seed(config.seed, 2));
  std::mt19937_64 shuffle_rng(stream_seed(config.seed, 3));
  std::mt19937_64 bc_rng(stream_seed(config.seed, 4));

  ChunkPolicy policy = make_chunk_policy(shape, config.hidden, config.init_log_std, init_rng);
  ValueHead critic = make_value_head(shape, config.hidden, init_rng);
  Learner learner(std::move(policy), std::move(critic), config);

  TrainResult result;
  std::optional<DemoBuffer> buffer;
  if (config.mode != TrainMode::kPpo) {
    result.seed_demos = seed_demonstrations(config);
    BufferOptions options;
    options.capacity = std::max(config.buffer_capacity, static_cast<int>(result.seed_demos.size()));
    if (config.ablations.buffer_unfiltered) {
      options.length_filter = false;
    }
    options.adaptive_limit = config.adaptive_limit;
    buffer = DemoBuffer::from_experts(result.seed_demos, options);
  }
  const bool admit = config.mode == TrainMode::kFull && !config.ablations.buffer_frozen;
  const bool uses_rollouts = config.mode != TrainMode::kBcOnly;

  std::optional<RolloutCollector> collector;
  if (uses_rollouts) {
    collector.emplace(config.task, kTrainSeedBase + (config.seed % (1ULL << 20)) * (1ULL << 20), config.gamma);
  }
  const double gamma_macro = std::pow(config.gamma, h);

  std::int64_t env_steps = 0;
  std::int64_t update_idx = 0;
  while (learner.optimizer_steps() < config.total_steps) {
    UpdateLog row;
    row.update_idx = update_idx;

    std::vector<MacroTransition> transitions;
    std::vector<AdvantageEstimate> advantages;
    if (uses_rollouts) {
      RolloutBatch batch = collector->collect(learner.policy(), learner.critic(), config.rollout_macro_steps,
                                              rollout_rng);
      env_steps += batch.env_steps;
      row.episodes_finished = static_cast<int>(batch.trajectories.size());
      for (auto& traj : batch.trajectories) {
        if (traj.success) ++row.rollout_successes;
        if (admit) buffer->try_admit(std::move(traj));
      }
      transitions = std::move(batch.transitions);
      advantages = compute_gae(transitions, gamma_macro, config.lambda);
      std::vector<double> adv(advantages.size());
      for (std::size_t i = 0; i < adv.size(); ++i) adv[i] = advantages[i].advantage;
      normalize_advantages(adv);
      for (std::size_t i = 0; i < adv.size(); ++i) advantages[i].advantage = adv[i];
    }

    const std::size_t n = uses_rollouts ? transitions.size() : static_cast<std::size_t>(config.rollout_macro_steps);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    double ppo_sum = 0.0, bc_sum = 0.0, value_sum = 0.0;
    int mb_count = 0;
    for (int epoch = 0; epoch < config.epochs_per_update && learner.optimizer_steps() < config.total_steps; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t start = 0; start < n && learner.optimizer_steps() < config.total_steps;
           start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
        std::vector<MacroTransition> mb_tr;
        std::vector<AdvantageEstimate> mb_adv;
        if (uses_rollouts) {
          for (std::size_t k = start; k < end; ++k) {
            mb_tr.push_back(transitions[order[k]]);
            mb_adv.push_back(advantages[order[k]]);
          }
        }
        std::vector<ChunkRecord> bc_batch;
        if (buffer) bc_batch = buffer->sample(config.batch_size, bc_rng);
        MinibatchStats stats;
        try {
          stats = learner.update(mb_tr, mb_adv, bc_batch);
        } catch (const TrainingDiverged&) {
          if (!hooks.divergence_snapshot_path.empty()) {
            std::ofstream snap(hooks.divergence_snapshot_path, std::ios::binary | std::ios::trunc);
            write_checkpoint(snap, learner.policy(), learner.critic());
          }
          throw;
        }
        row.beta = stats.beta;
        row.excluded_ratios += stats.excluded_ratios;
        ppo_sum += stats.ppo_loss;
        bc_sum += stats.bc_loss;
        value_sum += stats.value_loss;
        ++mb_count;
      }
    }
    if (mb_count > 0) {
      row.ppo_loss = ppo_sum / mb_count;
      row.bc_loss = bc_sum / mb_count;
      row.value_loss = value_sum / mb_count;
    }
    row.env_steps = env_steps;
    row.optimizer_steps = learner.optimizer_steps();
    if (buffer) {
      row.buffer_size = buffer->size();
      row.admitted = buffer->admitted_count();
      row.rejected = buffer->rejected_count();
      row.buffer_min_length = buffer->min_length();
    }
    const bool last = learner.optimizer_steps() >= config.total_steps;
    if (last || (update_idx + 1) % config.eval_interval == 0) {
      row.eval = evaluate(learner.policy(), config.task, config.eval_episodes, config.eval_seed);
    }
    if (hooks.on_update) hooks.on_update(row);
    result.log.push_back(std::move(row));
    ++update_idx;
  }

  result.final_eval = result.log.empty() || !result.log.back().eval
                          ? evaluate(learner.policy(), config.task, config.eval_episodes, config.eval_seed)
                          : *result.log.back().eval;
  result.policy = learner.policy();
  result.critic = learner.critic();
  result.buffer = std::move(buffer);
  return result;
}

std::string metrics_csv_row(const UpdateLog& r) {
  std::string s = std::to_string(r.update_idx) + ',' + std::to_string(r.env_steps) + ',' + fmt(r.beta) + ',' +
                  fmt(r.ppo_loss) + ',' + fmt(r.bc_loss) + ',' + fmt(r.value_loss) + ',' +
                  std::to_string(r.buffer_size) + ',';
  if (r.eval) {
    s += fmt(r.eval->acc) + ',' + format_metric(r.eval->len_p10) + ',' + format_metric(r.eval->avg_shortest10);
  } else {
    s += ",,";
  }
  return s;
}

void write_metrics_csv(std::ostream& out, std::span<const UpdateLog> log) {
  out << kMetricsCsvHeader << '\n';
  for (const auto& row : log) out << metrics_csv_row(row) << '\n';
}

}  // namespace chunkrl
