#include "chunkrl/adamw.hpp"

#include <cmath>

#include "chunkrl/errors.hpp"

namespace chunkrl {

void adamw_step(std::span<const ParamSlot> slots, AdamWState& state, const AdamWConfig& config) {
  if (!(config.lr > 0.0)) throw ConfigError("adamw learning rate must be positive");
  for (const auto& slot : slots) {
    if (slot.values.size() != slot.grads.size()) throw ShapeError("parameter/gradient size mismatch");
    for (double g : slot.grads) {
      if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient passed to adamw_step");
    }
  }
  if (state.first_moment.empty()) {
    for (const auto& slot : slots) {
      const auto n = static_cast<Eigen::Index>(slot.values.size());
      state.first_moment.push_back(Eigen::VectorXd::Zero(n));
      state.second_moment.push_back(Eigen::VectorXd::Zero(n));
    }
  }
  if (state.first_moment.size() != slots.size()) throw ShapeError("adamw state has wrong slot count");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (static_cast<std::size_t>(state.first_moment[i].size()) != slots[i].values.size()) {
      throw ShapeError("adamw state slot size mismatch");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const double decay = 1.0 - config.lr * config.weight_decay;

  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& slot = slots[i];
    for (std::size_t j = 0; j < slot.values.size(); ++j) {
      const double g = slot.grads[j];
      const auto jj = static_cast<Eigen::Index>(j);
      m[jj] = config.beta1 * m[jj] + (1.0 - config.beta1) * g;
      v[jj] = config.beta2 * v[jj] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[jj] / correction1;
      const double v_hat = v[jj] / correction2;
      slot.values[j] = slot.values[j] * decay - config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

void append_slots(MlpParams& params, const GradBundle& grads, std::vector<ParamSlot>& out) {
  if (grads.layers.size() != params.layers.size()) throw ShapeError("gradient bundle depth mismatch");
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    auto& layer = params.layers[k];
    const auto& g = grads.layers[k];
    if (g.weight.rows() != layer.weight.rows() || g.weight.cols() != layer.weight.cols() ||
        g.bias.size() != layer.bias.size()) {
      throw ShapeError("gradient bundle is not shape-congruent with params");
    }
    out.push_back({{layer.weight.data(), static_cast<std::size_t>(layer.weight.size())},
                   {g.weight.data(), static_cast<std::size_t>(g.weight.size())}});
    out.push_back({{layer.bias.data(), static_cast<std::size_t>(layer.bias.size())},
                   {g.bias.data(), static_cast<std::size_t>(g.bias.size())}});
  }
}

void adamw_step(MlpParams& params, const GradBundle& grads, AdamWState& state,
                const AdamWConfig& config) {
  std::vector<ParamSlot> slots;
  append_slots(params, grads, slots);
  adamw_step(slots, state, config);
}

}  // namespace chunkrl
