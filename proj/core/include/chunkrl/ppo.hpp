#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "chunkrl/policy.hpp"

namespace chunkrl {

// One chunk-level decision: the policy was queried once at `obs` and the
// chunk ran open-loop for up to h env steps.
struct MacroTransition {
  Observation obs;
  ActionChunk chunk;
  double old_log_prob = 0.0;
  double reward_agg = 0.0;  // sum_i gamma^i r_i over executed steps
  double value_old = 0.0;
  double next_value_old = 0.0;  // 0 when done; bootstrap value otherwise
  bool done = false;
  bool truncated = false;
  int executed_steps = 0;
};

struct AdvantageEstimate {
  double advantage = 0.0;
  double return_target = 0.0;
};

// GAE over one ordered segment. Terminal transitions drop the bootstrap;
// both terminal and truncated transitions cut the recursion.
std::vector<AdvantageEstimate> compute_gae(std::span<const MacroTransition> transitions,
                                           double gamma_macro, double lambda);

// In-place (a - mean) / (std + 1e-8), population std.
void normalize_advantages(std::span<double> advantages);

struct SurrogateTerm {
  double value = 0.0;
  double d_new_log_prob = 0.0;  // derivative of value wrt new_log_prob
  bool finite = true;
};

// min(r A, clip(r, 1-eps, 1+eps) A) with r = exp(new - old).
SurrogateTerm ppo_surrogate_term(double new_log_prob, double old_log_prob, double advantage,
                                 double epsilon);
double ppo_surrogate(double new_log_prob, double old_log_prob, double advantage, double epsilon);

struct ValueLossTerm {
  double value = 0.0;
  double d_v_new = 0.0;
};

// max((R - v)^2, (R - clip(v, v_old - eps, v_old + eps))^2)
ValueLossTerm clipped_value_loss_term(double v_new, double v_old, double target, double epsilon);
double clipped_value_loss(double v_new, double v_old, double target, double epsilon);

// tanh(t / T_warmup)
double beta_schedule(long long t, long long warmup);

struct LossWeights {
  double value = 0.5;
  double entropy = 0.0;
};

double combined_loss(double actor_surrogate_mean, double bc_loss, double value_loss, double entropy,
                     double beta_t, const LossWeights& weights);

}  // namespace chunkrl
