#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fm/rng.hpp"

// Small dense networks: input -> hidden -> hidden -> output with tanh hidden
// units and a linear head, reverse-mode gradients and Adam.
namespace fm::nn {

class Mlp {
 public:
  /// Intermediate values from a forward pass, consumed by backward().
  struct Tape {
    std::vector<std::vector<double>> activations;  // input, then each layer's output
  };

  Mlp() = default;
  /// Zero-initialized network with two hidden layers of `hidden` units.
  Mlp(std::size_t inputs, std::size_t outputs, std::size_t hidden = 64);

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  void init_uniform(Rng& rng);

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }

  /// Flat parameters: per layer, the weight matrix (out x in, row-major)
  /// followed by the bias vector.
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::vector<double> forward(std::span<const double> input) const;
  std::vector<double> forward(std::span<const double> input, Tape& tape) const;

  /// Accumulates d(loss)/d(params) into `param_grad` given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> output_grad, std::span<double> param_grad) const;

  /// Binary snapshot; layout documented in docs/formats.md.
  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + sizes_[layer + 1] * sizes_[layer]; }
  void layout();

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
};

AdamState make_adam_state(std::size_t parameter_count);

/// One bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config);

}  // namespace fm::nn
