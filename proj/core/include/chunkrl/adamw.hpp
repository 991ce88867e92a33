#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "chunkrl/mlp.hpp"

namespace chunkrl {

struct AdamWConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// One mutable parameter array paired with its gradient.
struct ParamSlot {
  std::span<double> values;
  std::span<const double> grads;
};

// Moment accumulators, one per parameter slot, sized on the first step.
struct AdamWState {
  std::vector<Eigen::VectorXd> first_moment;
  std::vector<Eigen::VectorXd> second_moment;
  std::int64_t step = 0;
};

// Decoupled weight decay followed by the bias-corrected Adam update. Every
// gradient is checked before anything is written; a non-finite entry throws
// NonFiniteError and leaves both params and state untouched.
void adamw_step(std::span<const ParamSlot> slots, AdamWState& state, const AdamWConfig& config);

void adamw_step(MlpParams& params, const GradBundle& grads, AdamWState& state,
                const AdamWConfig& config);

// Appends one slot per weight matrix and bias vector, in layer order.
void append_slots(MlpParams& params, const GradBundle& grads, std::vector<ParamSlot>& out);

}  // namespace chunkrl
