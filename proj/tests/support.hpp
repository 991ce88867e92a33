#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "chunkrl/demo_buffer.hpp"
#include "chunkrl/mlp.hpp"
#include "chunkrl/policy.hpp"

namespace chunkrl::testing {

// Pointers into every weight and bias, layer by layer (weights column-major).
inline std::vector<double*> param_refs(MlpParams& params) {
  std::vector<double*> out;
  for (auto& layer : params.layers) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) out.push_back(layer.weight.data() + i);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) out.push_back(layer.bias.data() + i);
  }
  return out;
}

// Same ordering as param_refs.
inline Eigen::VectorXd flatten(const GradBundle& grads) {
  std::vector<double> flat;
  for (const auto& layer : grads.layers) {
    flat.insert(flat.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    flat.insert(flat.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

// Central differences of f with respect to each referenced scalar.
inline Eigen::VectorXd numeric_gradient(const std::vector<double*>& refs,
                                        const std::function<double()>& f, double step = 1e-6) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(refs.size()));
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const double saved = *refs[i];
    *refs[i] = saved + step;
    const double plus = f();
    *refs[i] = saved - step;
    const double minus = f();
    *refs[i] = saved;
    out[static_cast<Eigen::Index>(i)] = (plus - minus) / (2.0 * step);
  }
  return out;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-12) return (a - b).norm();
  return (a - b).norm() / scale;
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Observation random_observation(const PolicyShape& shape, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> task(0, shape.num_tasks - 1);
  return Observation{random_vector(shape.state_dim, rng), task(rng)};
}

// A synthetic trajectory of the given length; the final step carries the outcome.
inline Trajectory synthetic_trajectory(int length, bool success, int horizon = 4, int state_dim = 8,
                                       double tag = 0.0) {
  Trajectory traj;
  traj.task_id = 0;
  traj.source = TrajectorySource::kSelf;
  for (int t = 0; t < length; ++t) {
    StepRecord step;
    step.obs.state = Eigen::VectorXd::Constant(state_dim, tag + t);
    step.obs.prompt_id = 0;
    step.action = Eigen::VectorXd::Constant(2, static_cast<double>(t));
    const bool last = t + 1 == length;
    step.done = last && success;
    step.truncated = last && !success;
    step.reward = step.done ? 1.0 : 0.0;
    traj.steps.push_back(std::move(step));
  }
  traj.chunks = slice_chunks(traj.steps, horizon);
  traj.length = length;
  traj.success = success;
  return traj;
}

}  // namespace chunkrl::testing
