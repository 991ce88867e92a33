#include "chunkrl/mlp.hpp"

#include <cmath>
#include <string>

#include "chunkrl/errors.hpp"

namespace chunkrl {
namespace {

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kTanh:
      return z.array().tanh().matrix();
    case Activation::kIdentity:
      break;
  }
  return z;
}

// d(activation)/dz expressed through the cached pre-activation.
Eigen::MatrixXd activation_derivative(Activation act, const Eigen::MatrixXd& z) {
  switch (act) {
    case Activation::kTanh:
      return (1.0 - z.array().tanh().square()).matrix();
    case Activation::kIdentity:
      break;
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

std::vector<DenseLayer> shaped_layers(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw ShapeError("mlp needs at least input and output sizes");
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    if (sizes[k] <= 0 || sizes[k + 1] <= 0) throw ShapeError("mlp layer sizes must be positive");
    DenseLayer layer;
    layer.weight = Eigen::MatrixXd::Zero(sizes[k + 1], sizes[k]);
    layer.bias = Eigen::VectorXd::Zero(sizes[k + 1]);
    layer.activation = (k + 2 == sizes.size()) ? Activation::kIdentity : Activation::kTanh;
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

int MlpParams::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
int MlpParams::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::size_t MlpParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

bool MlpParams::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("mlp has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].bias.size() != layers[k].weight.rows()) {
      throw ShapeError("layer " + std::to_string(k) + ": bias length does not match weight rows");
    }
    if (k > 0 && layers[k].in_dim() != layers[k - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(k) + ": in-dim " +
                       std::to_string(layers[k].in_dim()) + " != previous out-dim " +
                       std::to_string(layers[k - 1].out_dim()));
    }
  }
}

MlpParams make_mlp(const std::vector<int>& sizes, std::mt19937_64& rng) {
  MlpParams params{shaped_layers(sizes)};
  for (auto& layer : params.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    }
  }
  return params;
}

MlpParams make_zero_mlp(const std::vector<int>& sizes) { return MlpParams{shaped_layers(sizes)}; }

GradBundle GradBundle::zeros_like(const MlpParams& params) {
  GradBundle g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

bool GradBundle::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return input.allFinite();
}

GradBundle& GradBundle::operator+=(const GradBundle& other) {
  if (other.layers.size() != layers.size()) throw ShapeError("gradient bundles differ in depth");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += other.layers[k].weight;
    layers[k].bias += other.layers[k].bias;
  }
  if (input.size() == other.input.size()) {
    input += other.input;
  } else {
    input.resize(0, 0);
  }
  return *this;
}

GradBundle& GradBundle::operator*=(double scale) {
  for (auto& layer : layers) {
    layer.weight *= scale;
    layer.bias *= scale;
  }
  input *= scale;
  return *this;
}

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::VectorXd& input) {
  return mlp_forward_batch(params, input, nullptr).col(0);
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                  ForwardCache* cache) {
  if (params.layers.empty()) throw ShapeError("mlp has no layers");
  if (inputs.rows() != params.in_dim()) {
    throw ShapeError("mlp input has " + std::to_string(inputs.rows()) + " rows, expected " +
                     std::to_string(params.in_dim()));
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd x = inputs;
  for (const auto& layer : params.layers) {
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(x));
      cache->pre_activations.push_back(z);
    }
    x = activate(layer.activation, z);
  }
  return x;
}

GradBundle mlp_backward(const MlpParams& params, const ForwardCache& cache,
                        const Eigen::MatrixXd& upstream) {
  if (cache.empty() || cache.inputs.size() != params.layers.size()) {
    throw UsageError("mlp_backward called without a matching forward cache");
  }
  if (upstream.rows() != params.out_dim() || upstream.cols() != cache.batch_size()) {
    throw ShapeError("upstream gradient shape does not match the network output");
  }
  GradBundle grads;
  grads.layers.resize(params.layers.size());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const DenseLayer& layer = params.layers[k];
    if (layer.activation == Activation::kTanh && k + 1 < cache.inputs.size()) {
      // The next layer's cached input is this layer's tanh output.
      delta.array() *= 1.0 - cache.inputs[k + 1].array().square();
    } else {
      delta.array() *= activation_derivative(layer.activation, cache.pre_activations[k]).array();
    }
    grads.layers[k].weight = delta * cache.inputs[k].transpose();
    grads.layers[k].bias = delta.rowwise().sum();
    delta = layer.weight.transpose() * delta;
  }
  grads.input = std::move(delta);
  return grads;
}

GradBundle mlp_backward(const MlpParams& params, const Eigen::VectorXd& input,
                        const Eigen::VectorXd& upstream) {
  ForwardCache cache;
  mlp_forward_batch(params, input, &cache);
  return mlp_backward(params, cache, upstream);
}

}  // namespace chunkrl
