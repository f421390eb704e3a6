#include "fm/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "fm/error.hpp"

namespace fm::nn {

Mlp::Mlp(std::size_t inputs, std::size_t outputs, std::size_t hidden) : sizes_{inputs, hidden, hidden, outputs} {
  if (inputs == 0 || outputs == 0 || hidden == 0) throw ConfigError("network layer sizes must be positive");
  layout();
}

void Mlp::layout() {
  offsets_.clear();
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::init_uniform(Rng& rng) {
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t count = sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    for (std::size_t i = 0; i < count; ++i) params_[offsets_[l] + i] = dist(rng);
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Tape tape;
  return forward(input, tape);
}

std::vector<double> Mlp::forward(std::span<const double> input, Tape& tape) const {
  if (input.size() != input_size())
    throw ConfigError("network expects " + std::to_string(input_size()) + " inputs, got " +
                      std::to_string(input.size()));
  const std::size_t layers = sizes_.size() - 1;
  tape.activations.resize(layers + 1);
  tape.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const std::vector<double>& x = tape.activations[l];
    std::vector<double>& y = tape.activations[l + 1];
    y.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
  }
  return tape.activations.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> output_grad, std::span<double> param_grad) const {
  if (output_grad.size() != output_size() || param_grad.size() != params_.size())
    throw ConfigError("gradient buffer sizes do not match the network");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> prev;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    double* gw = param_grad.data() + weight_offset(l);
    double* gb = param_grad.data() + bias_offset(l);
    const std::vector<double>& x = tape.activations[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
    }
    // x holds tanh outputs of layer l-1, so tanh' = 1 - x^2
    for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - x[i] * x[i];
    delta.swap(prev);
  }
}

namespace {

constexpr char kMagic[4] = {'F', 'M', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated network snapshot");
  return value;
}

}  // namespace

void Mlp::save(std::ostream& out) const {
  out.write(kMagic, 4);
  write_raw<std::uint32_t>(out, kVersion);
  write_raw<std::uint32_t>(out, static_cast<std::uint32_t>(sizes_.size()));
  for (std::size_t s : sizes_) write_raw<std::uint64_t>(out, s);
  for (double p : params_) write_raw<double>(out, p);
  if (!out) throw IoError("failed to write network snapshot");
}

Mlp Mlp::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a network snapshot");
  if (read_raw<std::uint32_t>(in) != kVersion) throw IoError("unsupported network snapshot version");
  const auto count = read_raw<std::uint32_t>(in);
  if (count != 4) throw IoError("snapshot must describe two hidden layers");
  Mlp net;
  for (std::uint32_t i = 0; i < count; ++i) net.sizes_.push_back(static_cast<std::size_t>(read_raw<std::uint64_t>(in)));
  net.layout();
  for (double& p : net.params_) p = read_raw<double>(in);
  return net;
}

AdamState make_adam_state(std::size_t parameter_count) {
  return AdamState{std::vector<double>(parameter_count, 0.0), std::vector<double>(parameter_count, 0.0), 0};
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw ConfigError("Adam state does not match parameter count");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * grads[i];
    v = config.beta2 * v + (1.0 - config.beta2) * grads[i] * grads[i];
    params[i] -= config.learning_rate * (m / c1) / (std::sqrt(v / c2) + config.epsilon);
  }
}

}  // namespace fm::nn
