#pragma once

#include <span>
#include <vector>

#include "styleval/rng.hpp"

namespace styleval {

// Small fully connected network: tanh on hidden layers, identity output.
// Parameters live in one flat double vector (layer by layer, weights
// row-major [out][in] then biases), which is also the checkpoint payload.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, std::vector<int> layer_dims);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return layer_dims_.empty() ? input_dim_ : layer_dims_.back(); }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  int param_count() const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  // Scaled-normal init: weight ~ N(0, 1/fan_in), bias 0.
  void init(Rng& rng);

  std::vector<double> forward(std::span<const double> x) const;

  // Forward pass keeping pre-activations for backward.
  struct Tape {
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<double> output;
  };
  Tape forward_tape(std::span<const double> x) const;

  // Accumulates parameter gradients into grad (same layout as params) and
  // returns dL/dx. dout is dL/doutput.
  std::vector<double> backward(const Tape& tape, std::span<const double> dout,
                               std::span<double> grad) const;

 private:
  int input_dim_ = 0;
  std::vector<int> layer_dims_;
  std::vector<double> params_;
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

}  // namespace styleval
