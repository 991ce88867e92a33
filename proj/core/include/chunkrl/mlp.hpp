#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace chunkrl {

enum class Activation : std::uint8_t { kIdentity = 0, kTanh = 1 };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

// Fully connected network. Hidden layers use tanh, the output layer is
// linear; layer k+1 consumes the output of layer k.
struct MlpParams {
  std::vector<DenseLayer> layers;

  int in_dim() const;
  int out_dim() const;
  std::size_t num_parameters() const;
  bool all_finite() const;
  // Throws ShapeError if consecutive layers disagree or a bias is misshaped.
  void validate() const;
};

// sizes = {in, hidden..., out}. Weights are drawn uniformly from
// +-sqrt(6 / (fan_in + fan_out)), biases start at zero.
MlpParams make_mlp(const std::vector<int>& sizes, std::mt19937_64& rng);

// Same shapes as make_mlp, every parameter zero.
MlpParams make_zero_mlp(const std::vector<int>& sizes);

// Column-batched activations recorded by a forward pass. inputs[k] is what
// layer k consumed, pre_activations[k] is W_k x + b_k.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;

  bool empty() const { return inputs.empty(); }
  Eigen::Index batch_size() const { return inputs.empty() ? 0 : inputs.front().cols(); }
};

struct LayerGrad {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Gradients of sum_j upstream_j . output_j; one entry per layer plus the
// gradient with respect to the input batch.
struct GradBundle {
  std::vector<LayerGrad> layers;
  Eigen::MatrixXd input;

  static GradBundle zeros_like(const MlpParams& params);
  bool all_finite() const;
  GradBundle& operator+=(const GradBundle& other);
  GradBundle& operator*=(double scale);
};

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& input);

// Each column of `inputs` is one sample. Fills `cache` when non-null.
Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                  ForwardCache* cache = nullptr);

// Backward pass against a cache produced by mlp_forward_batch. Parameter
// gradients are summed over the batch columns.
GradBundle mlp_backward(const MlpParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream);

// Single-sample convenience: runs the forward pass internally.
GradBundle mlp_backward(const MlpParams& params, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream);

}  // namespace chunkrl
