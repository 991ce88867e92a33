#include "chunkrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chunkrl/errors.hpp"

namespace chunkrl {

std::vector<AdvantageEstimate> compute_gae(std::span<const MacroTransition> transitions,
                                           double gamma_macro, double lambda) {
  if (!(gamma_macro > 0.0 && gamma_macro <= 1.0)) throw ConfigError("gamma_macro must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  std::vector<AdvantageEstimate> out(transitions.size());
  double next_advantage = 0.0;
  for (std::size_t i = transitions.size(); i-- > 0;) {
    const MacroTransition& tr = transitions[i];
    if (!std::isfinite(tr.reward_agg)) throw NonFiniteError("non-finite reward in rollout segment");
    const double not_done = tr.done ? 0.0 : 1.0;
    const double continues = (tr.done || tr.truncated) ? 0.0 : 1.0;
    const double delta = tr.reward_agg + gamma_macro * tr.next_value_old * not_done - tr.value_old;
    const double advantage = delta + gamma_macro * lambda * continues * next_advantage;
    out[i] = {advantage, advantage + tr.value_old};
    next_advantage = advantage;
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (double& a : advantages) a = (a - mean) / (std + 1e-8);
}

SurrogateTerm ppo_surrogate_term(double new_log_prob, double old_log_prob, double advantage,
                                 double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("clip epsilon must be positive");
  const double ratio = std::exp(new_log_prob - old_log_prob);
  if (!std::isfinite(ratio) || !std::isfinite(advantage)) return {0.0, 0.0, false};
  const double unclipped = ratio * advantage;
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage;
  if (unclipped <= clipped) return {unclipped, unclipped, true};  // d(r A)/d log r = r A
  return {clipped, 0.0, true};
}

double ppo_surrogate(double new_log_prob, double old_log_prob, double advantage, double epsilon) {
  const SurrogateTerm term = ppo_surrogate_term(new_log_prob, old_log_prob, advantage, epsilon);
  return term.finite ? term.value : std::numeric_limits<double>::quiet_NaN();
}

ValueLossTerm clipped_value_loss_term(double v_new, double v_old, double target, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("value clip epsilon must be positive");
  const double v_clipped = std::clamp(v_new, v_old - epsilon, v_old + epsilon);
  const double plain = (target - v_new) * (target - v_new);
  const double clipped = (target - v_clipped) * (target - v_clipped);
  if (plain >= clipped) return {plain, -2.0 * (target - v_new)};
  const bool inside = v_new > v_old - epsilon && v_new < v_old + epsilon;
  return {clipped, inside ? -2.0 * (target - v_clipped) : 0.0};
}

double clipped_value_loss(double v_new, double v_old, double target, double epsilon) {
  return clipped_value_loss_term(v_new, v_old, target, epsilon).value;
}

double beta_schedule(long long t, long long warmup) {
  if (warmup <= 0) throw ConfigError("T_warmup must be positive");
  if (t < 0) throw ConfigError("training step must be non-negative");
  return std::tanh(static_cast<double>(t) / static_cast<double>(warmup));
}

double combined_loss(double actor_surrogate_mean, double bc_loss, double value_loss, double entropy,
                     double beta_t, const LossWeights& weights) {
  return beta_t * (-actor_surrogate_mean) + bc_loss + weights.value * value_loss -
         weights.entropy * entropy;
}

}  // namespace chunkrl
