#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fm/error.hpp"
#include "fm/nn.hpp"
#include "fm/verify/oracles.hpp"

using namespace fm;
using namespace fm::nn;

namespace {

// layer-by-layer evaluation straight from the flat parameter layout
std::vector<double> reference_forward(const Mlp& net, std::vector<double> x) {
  const auto& sizes = net.layer_sizes();
  const auto p = net.parameters();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = p[off + in * out + o];
      for (std::size_t i = 0; i < in; ++i) s += p[off + o * in + i] * x[i];
      y[o] = l + 2 < sizes.size() ? std::tanh(s) : s;
    }
    off += in * out + out;
    x = y;
  }
  return x;
}

}  // namespace

TEST_CASE("layout") {
  Mlp net(3, 2, 4);
  CHECK(net.layer_sizes() == std::vector<std::size_t>{3, 4, 4, 2});
  CHECK(net.parameter_count() == (3 * 4 + 4) + (4 * 4 + 4) + (4 * 2 + 2));
}

TEST_CASE("zero network outputs zero") {
  Mlp net(5, 3, 8);
  for (double y : net.forward(std::vector<double>{1, 2, 3, 4, 5})) CHECK(y == 0.0);
}

TEST_CASE("odd at the origin") {
  Mlp net(1, 1, 1);
  for (double& w : net.parameters()) w = 0.0;
  auto p = net.parameters();
  p[0] = 1.0;  // layer 0 weight
  p[2] = 1.0;  // layer 1 weight
  p[4] = 1.0;  // head weight
  CHECK(net.forward(std::vector<double>{0.0})[0] == 0.0);
  CHECK(net.forward(std::vector<double>{0.5})[0] == doctest::Approx(std::tanh(std::tanh(0.5))));
}

TEST_CASE("forward matches a hand-written composition") {
  Rng rng(4);
  Mlp net(4, 3, 7);
  net.init_uniform(rng);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> x{uniform01(rng), -uniform01(rng), 2 * uniform01(rng), 0.3};
    const auto y = net.forward(x), ref = reference_forward(net, x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - ref[i]) <= 1e-12);
  }
}

TEST_CASE("initialization bounds") {
  Rng rng(8);
  Mlp net(16, 2, 64);
  net.init_uniform(rng);
  const auto p = net.parameters();
  for (std::size_t i = 0; i < 16 * 64 + 64; ++i) CHECK(std::abs(p[i]) <= 0.25);
}

TEST_CASE("backward") {
  Rng rng(6);
  Mlp net(3, 2, 5);
  net.init_uniform(rng);
  const std::vector<double> x{0.3, -0.7, 1.1};
  Mlp::Tape tape;
  net.forward(x, tape);

  SUBCASE("zero output gradient gives zero parameter gradient") {
    std::vector<double> g(net.parameter_count(), 0.0);
    net.backward(tape, std::vector<double>{0.0, 0.0}, g);
    for (double v : g) CHECK(v == 0.0);
  }
  SUBCASE("output bias gradient is the output gradient") {
    std::vector<double> g(net.parameter_count(), 0.0);
    net.backward(tape, std::vector<double>{1.0, 0.0}, g);
    CHECK(g[net.parameter_count() - 2] == 1.0);
    CHECK(g[net.parameter_count() - 1] == 0.0);
  }
  SUBCASE("finite differences on 20 random triples") {
    for (int trial = 0; trial < 20; ++trial) {
      Mlp n(1 + trial % 4, 1 + trial % 3, 3 + trial % 5);
      n.init_uniform(rng);
      std::vector<double> in(n.input_size()), dir(n.output_size());
      for (double& v : in) v = 2 * uniform01(rng) - 1;
      for (double& v : dir) v = 2 * uniform01(rng) - 1;
      Mlp::Tape t;
      n.forward(in, t);
      std::vector<double> g(n.parameter_count(), 0.0);
      n.backward(t, dir, g);
      const auto loss = [&](std::span<const double> params) {
        Mlp m = n;
        std::copy(params.begin(), params.end(), m.parameters().begin());
        const auto y = m.forward(in);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += dir[i] * y[i];
        return s;
      };
      const std::vector<double> flat(n.parameters().begin(), n.parameters().end());
      const auto num = verify::numeric_gradient(loss, flat, 1e-5);
      double worst = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(g[i] - num[i]) / std::max(1.0, std::abs(num[i])));
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("snapshot round trip") {
  Rng rng(2);
  Mlp net(6, 2, 9);
  net.init_uniform(rng);
  std::stringstream buf;
  net.save(buf);
  const Mlp back = Mlp::load(buf);
  CHECK(back == net);
  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(Mlp::load(bad), IoError);
}

TEST_CASE("Adam") {
  AdamConfig cfg;
  SUBCASE("zero gradient leaves parameters alone and decays moments") {
    std::vector<double> p{1.0, -2.0};
    auto st = make_adam_state(2);
    adam_step(p, std::vector<double>{0.0, 0.0}, st, cfg);
    CHECK(p == std::vector<double>{1.0, -2.0});
    CHECK(st.step_count == 1);
    adam_step(p, std::vector<double>{1.0, 1.0}, st, cfg);
    const auto m = st.first_moment[0], v = st.second_moment[0];
    adam_step(p, std::vector<double>{0.0, 0.0}, st, cfg);
    CHECK(st.first_moment[0] == doctest::Approx(cfg.beta1 * m));
    CHECK(st.second_moment[0] == doctest::Approx(cfg.beta2 * v));
  }
  SUBCASE("first step moves by lr in the direction of -sign(g)") {
    std::vector<double> p{1.0, 1.0};
    auto st = make_adam_state(2);
    adam_step(p, std::vector<double>{3.0, -0.01}, st, cfg);
    CHECK(p[0] == doctest::Approx(1.0 - cfg.learning_rate).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(1.0 + cfg.learning_rate).epsilon(1e-6));
  }
  SUBCASE("opposite gradients roughly cancel") {
    std::vector<double> p{0.0};
    auto st = make_adam_state(1);
    adam_step(p, std::vector<double>{1.0}, st, cfg);
    adam_step(p, std::vector<double>{-1.0}, st, cfg);
    CHECK(std::abs(p[0]) <= 2 * cfg.learning_rate);
  }
}
