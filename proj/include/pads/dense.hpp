#pragma once

#include <json.hpp>

#include <cstddef>
#include <span>
#include <vector>

#include "pads/geometry.hpp"
#include "pads/random.hpp"

namespace pads {

// Fully connected network with ReLU between layers and a linear output layer.
// Parameters live in one flat vector; per layer the weight matrix (out x in,
// row-major) comes first, followed by the bias.
class DenseNet {
 public:
  struct Cache {
    std::vector<Matrix> inputs;  // input to each layer (post-activation of the previous one)
    std::vector<Matrix> pre;     // pre-activation of each hidden layer
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<int> sizes);

  // He-uniform weights, zero biases. The output layer is scaled by `output_scale`.
  void init(Rng& rng, double output_scale = 1.0);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;

  // Gradient of sum(d_out .* output) with respect to the flat parameter vector.
  // Optionally returns the gradient with respect to the input rows.
  std::vector<double> backward(const Cache& cache, const Matrix& d_out,
                               Matrix* d_input = nullptr) const;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<int>& sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }

  nlohmann::json to_json() const;
  static DenseNet from_json(const nlohmann::json& j);

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + static_cast<std::size_t>(sizes_[layer]) * sizes_[layer + 1];
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

}  // namespace pads
