#include "dde/error.hpp"
#include "dde/nn/mlp.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace dde;
using namespace dde::nn;

namespace {

struct Problem
{
  Mlp model;
  std::vector<double> x, t;
  std::size_t m = 0;
};

Problem
random_problem(std::uint64_t seed, bool bn, Activation out)
{
  Rng rng = make_rng(seed);
  MlpConfig c;
  c.k = 2 + rng() % 5;
  c.hidden_widths.clear();
  const std::size_t depth = 1 + rng() % 3;
  for (std::size_t l = 0; l < depth; ++l)
    c.hidden_widths.push_back(3 + rng() % 6);
  c.batch_norm = bn;
  c.output_activation = out;
  Problem p{ Mlp(c), {}, {}, 6 + rng() % 6 };
  p.model.init_he(rng);
  std::normal_distribution<double> g(0.0, 1.0);
  // Zero biases put ReLU inputs exactly on the kink whenever a whole previous
  // layer is inactive, where finite differences are one-sided.
  for (const auto& L : p.model.layers())
    for (std::size_t j = 0; j < L.out; ++j)
      p.model.params()[L.b + j] = 0.1 * g(rng);
  // non-trivial batch-norm affine parameters and running statistics
  for (const auto& L : p.model.layers())
    if (L.bn)
      for (std::size_t j = 0; j < L.out; ++j) {
        p.model.params()[L.gamma + j] = 1.0 + 0.3 * g(rng);
        p.model.params()[L.beta + j] = 0.3 * g(rng);
        p.model.running_mean()[L.stats + j] = 0.2 * g(rng);
        p.model.running_var()[L.stats + j] = 0.5 + std::abs(g(rng));
      }
  p.x.resize(p.m * c.k);
  for (auto& v : p.x)
    v = g(rng);
  p.t.resize(p.m);
  for (auto& v : p.t)
    v = std::abs(g(rng));
  return p;
}

double
loss_at(Mlp& model, const Problem& p, Mode mode)
{
  // Copy so train-mode running statistics do not drift between probes.
  Mlp probe = model;
  ForwardCache cache;
  std::vector<double> grad;
  forward(probe, p.x, p.m, mode, cache);
  return backward(probe, cache, p.t, mode, grad);
}

// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|,
// 1e-3 * max |analytic|).
double
gradient_error(Problem& p, Mode mode)
{
  std::vector<double> grad;
  ForwardCache cache;
  Mlp copy = p.model;
  loss_and_gradients(copy, p.x, p.t, mode, grad, cache);
  double gmax = 0.0;
  for (double v : grad)
    gmax = std::max(gmax, std::abs(v));
  double worst = 0.0;
  auto& w = p.model.params();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = w[i];
    const double h = 1e-6 * std::max(1.0, std::abs(orig));
    w[i] = orig + h;
    const double lp = loss_at(p.model, p, mode);
    w[i] = orig - h;
    const double lm = loss_at(p.model, p, mode);
    w[i] = orig;
    const double num = (lp - lm) / (2 * h);
    const double den = std::max({ std::abs(grad[i]), std::abs(num), 1e-3 * gmax });
    worst = std::max(worst, std::abs(grad[i] - num) / den);
  }
  return worst;
}

} // namespace

TEST_SUITE("mlp")
{
  TEST_CASE("gradients without batch norm")
  {
    for (std::uint64_t s = 0; s < 20; ++s) {
      auto p = random_problem(s, false, s % 2 ? Activation::linear : Activation::softplus);
      CAPTURE(s);
      CHECK(gradient_error(p, Mode::train) < 1e-4);
    }
  }

  TEST_CASE("gradients with frozen batch norm")
  {
    for (std::uint64_t s = 100; s < 120; ++s) {
      auto p = random_problem(s, true, Activation::linear);
      CAPTURE(s);
      CHECK(gradient_error(p, Mode::infer) < 1e-3);
    }
  }

  TEST_CASE("gradients with batch statistics")
  {
    for (std::uint64_t s = 200; s < 210; ++s) {
      auto p = random_problem(s, true, Activation::softplus);
      CAPTURE(s);
      CHECK(gradient_error(p, Mode::train) < 1e-3);
    }
  }

  TEST_CASE("exp output gradient")
  {
    auto p = random_problem(7, false, Activation::exp);
    CHECK(gradient_error(p, Mode::train) < 1e-4);
  }

  TEST_CASE("infer equals forward_infer and leaves the model unchanged")
  {
    auto p = random_problem(3, true, Activation::relu);
    const Mlp before = p.model;
    ForwardCache cache;
    forward_infer(p.model, p.x, p.m, cache);
    const auto y = p.model.infer(p.x, p.m);
    CHECK(std::vector<double>(cache.output().begin(), cache.output().end()) == y);
    CHECK(p.model == before);
    for (double v : y)
      CHECK(v >= 0.0);
  }

  TEST_CASE("train-mode forward updates running statistics")
  {
    auto p = random_problem(4, true, Activation::linear);
    const auto mean0 = p.model.running_mean();
    ForwardCache cache;
    forward(p.model, p.x, p.m, Mode::train, cache);
    CHECK(p.model.running_mean() != mean0);
    const auto& L = p.model.layers()[0];
    // running = 0.9 running + 0.1 batch for the first unit of layer 0
    double z_mean = 0.0;
    for (std::size_t i = 0; i < p.m; ++i) {
      double z = p.model.params()[L.b];
      for (std::size_t a = 0; a < L.in; ++a)
        z += p.x[i * L.in + a] * p.model.params()[L.w + a * L.out];
      z_mean += z;
    }
    z_mean /= static_cast<double>(p.m);
    CHECK(p.model.running_mean()[L.stats] ==
          doctest::Approx(0.9 * mean0[L.stats] + 0.1 * z_mean).epsilon(1e-12));
  }

  TEST_CASE("He initialization statistics")
  {
    MlpConfig c;
    c.k = 400;
    c.hidden_widths = { 300 };
    c.batch_norm = false;
    Mlp m(c);
    Rng rng = make_rng(1);
    m.init_he(rng);
    const auto& L = m.layers()[0];
    double s = 0, s2 = 0;
    const std::size_t n = L.in * L.out;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = m.params()[L.w + i];
      s += w;
      s2 += w * w;
    }
    CHECK(std::abs(s / n) < 0.01 * std::sqrt(2.0 / 400));
    CHECK(s2 / n == doctest::Approx(2.0 / 400).epsilon(0.02));
    CHECK(m.params()[L.b] == 0.0);
  }

  TEST_CASE("json round-trip is exact")
  {
    auto p = random_problem(9, true, Activation::softplus);
    const auto back = Mlp::from_json(nlohmann::json::parse(p.model.to_json().dump()));
    CHECK(back == p.model);
    auto j = p.model.to_json();
    j["layers"][0]["weight"].erase(0);
    CHECK_THROWS_AS(Mlp::from_json(j), FormatError);
  }

  TEST_CASE("config validation and shape errors")
  {
    MlpConfig c;
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c.k = 3;
    c.hidden_widths = { 4, 0 };
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c.hidden_widths = { 4 };
    c.bn_momentum = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c.bn_momentum = 0.9;
    CHECK(MlpConfig::from_json(c.to_json()) == c);
    CHECK_THROWS_AS(activation_from_name("tanh"), InvalidConfig);
    CHECK(feature_transform_from_name("log-scaled") == FeatureTransform::log_scaled);

    Mlp m(c);
    ForwardCache cache;
    std::vector<double> x(7);
    CHECK_THROWS_AS(forward(m, x, 2, Mode::infer, cache), ShapeMismatch);
    std::vector<double> x1(3);
    CHECK_THROWS_AS(forward(m, x1, 1, Mode::train, cache), ShapeMismatch);
  }

  TEST_CASE("non-finite loss is reported")
  {
    auto p = random_problem(11, false, Activation::linear);
    p.t[0] = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> grad;
    ForwardCache cache;
    CHECK_THROWS_AS(loss_and_gradients(p.model, p.x, p.t, Mode::train, grad, cache),
                    NonFiniteLoss);
  }
}
