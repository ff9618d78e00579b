#include "styleval/mlp.hpp"

#include <cassert>
#include <cmath>

namespace styleval {

Mlp::Mlp(int input_dim, std::vector<int> layer_dims)
    : input_dim_(input_dim), layer_dims_(std::move(layer_dims)) {
  params_.assign(static_cast<std::size_t>(param_count()), 0.0);
}

int Mlp::param_count() const {
  int total = 0;
  int in = input_dim_;
  for (int out : layer_dims_) {
    total += out * in + out;
    in = out;
  }
  return total;
}

void Mlp::init(Rng& rng) {
  std::size_t p = 0;
  int in = input_dim_;
  for (int out : layer_dims_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < out * in; ++i) params_[p++] = rng.normal() * scale;
    for (int i = 0; i < out; ++i) params_[p++] = 0.0;
    in = out;
  }
  assert(p == params_.size());
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> cur(x.begin(), x.end());
  std::size_t p = 0;
  int in = input_dim_;
  for (std::size_t l = 0; l < layer_dims_.size(); ++l) {
    const int out = layer_dims_[l];
    std::vector<double> next(static_cast<std::size_t>(out));
    const double* w = params_.data() + p;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wr = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wr[i] * cur[i];
      next[o] = (l + 1 < layer_dims_.size()) ? std::tanh(acc) : acc;
    }
    cur = std::move(next);
    p += static_cast<std::size_t>(out) * in + out;
    in = out;
  }
  return cur;
}

Mlp::Tape Mlp::forward_tape(std::span<const double> x) const {
  Tape tape;
  std::vector<double> cur(x.begin(), x.end());
  std::size_t p = 0;
  int in = input_dim_;
  for (std::size_t l = 0; l < layer_dims_.size(); ++l) {
    tape.inputs.push_back(cur);
    const int out = layer_dims_[l];
    std::vector<double> next(static_cast<std::size_t>(out));
    const double* w = params_.data() + p;
    const double* b = w + static_cast<std::size_t>(out) * in;
    for (int o = 0; o < out; ++o) {
      double acc = b[o];
      const double* wr = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) acc += wr[i] * cur[i];
      next[o] = (l + 1 < layer_dims_.size()) ? std::tanh(acc) : acc;
    }
    cur = std::move(next);
    p += static_cast<std::size_t>(out) * in + out;
    in = out;
  }
  tape.output = cur;
  return tape;
}

std::vector<double> Mlp::backward(const Tape& tape,
                                  std::span<const double> dout,
                                  std::span<double> grad) const {
  assert(grad.size() == params_.size());
  // Layer parameter offsets.
  std::vector<std::size_t> offsets(layer_dims_.size());
  {
    std::size_t p = 0;
    int in = input_dim_;
    for (std::size_t l = 0; l < layer_dims_.size(); ++l) {
      offsets[l] = p;
      p += static_cast<std::size_t>(layer_dims_[l]) * in + layer_dims_[l];
      in = layer_dims_[l];
    }
  }

  std::vector<double> delta(dout.begin(), dout.end());
  for (int l = static_cast<int>(layer_dims_.size()) - 1; l >= 0; --l) {
    const int out = layer_dims_[l];
    const int in = (l == 0) ? input_dim_ : layer_dims_[l - 1];
    const std::vector<double>& input = tape.inputs[l];
    const bool hidden = (l + 1 < static_cast<int>(layer_dims_.size()));

    // delta is dL/d(activation out); convert to dL/d(pre-activation).
    if (hidden) {
      // Recompute the tanh output from the layer's own forward pass.
      const std::vector<double>& next_input = tape.inputs[l + 1];
      for (int o = 0; o < out; ++o) {
        const double y = next_input[o];
        delta[o] *= (1.0 - y * y);
      }
    }

    const double* w = params_.data() + offsets[l];
    double* gw = grad.data() + offsets[l];
    double* gb = gw + static_cast<std::size_t>(out) * in;
    std::vector<double> dinput(static_cast<std::size_t>(in), 0.0);
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* wr = w + static_cast<std::size_t>(o) * in;
      double* gwr = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) {
        gwr[i] += d * input[i];
        dinput[i] += d * wr[i];
      }
      gb[o] += d;
    }
    delta = std::move(dinput);
  }
  return delta;
}

void adam_step(std::span<double> params, std::span<const double> grad,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  assert(params.size() == grad.size());
  if (state.m.size() != params.size()) state = AdamState(params.size());
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace styleval
