#include "dde/nn/mlp.hpp"

#include "dde/error.hpp"
#include "dde/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dde::nn {
namespace {

void
transpose(const double* src,
          std::size_t rows,
          std::size_t cols,
          std::vector<double>& dst)
{
  dst.resize(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      dst[j * rows + i] = src[i * cols + j];
}

std::vector<double>
slice(const std::vector<double>& v, std::size_t off, std::size_t n)
{
  return { v.begin() + static_cast<std::ptrdiff_t>(off),
           v.begin() + static_cast<std::ptrdiff_t>(off + n) };
}

void
put(std::vector<double>& v,
    std::size_t off,
    std::size_t n,
    const nlohmann::json& src,
    const char* what)
{
  const auto vals = src.get<std::vector<double>>();
  if (vals.size() != n)
    throw FormatError(std::string("model tensor '") + what + "' has " +
                      std::to_string(vals.size()) + " values, expected " +
                      std::to_string(n));
  std::copy(vals.begin(), vals.end(), v.begin() + static_cast<std::ptrdiff_t>(off));
}

// exp() of anything larger overflows; the unit saturates there.
constexpr double exp_clamp = 300.0;

} // namespace

const char*
activation_name(Activation a)
{
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::softplus:
      return "softplus";
    case Activation::exp:
      return "exp";
    case Activation::linear:
      return "linear";
  }
  return "?";
}

Activation
activation_from_name(const std::string& name)
{
  for (auto a : { Activation::relu, Activation::softplus, Activation::exp,
                  Activation::linear })
    if (name == activation_name(a))
      return a;
  throw InvalidConfig("unknown activation '" + name + "'");
}

const char*
feature_transform_name(FeatureTransform t)
{
  switch (t) {
    case FeatureTransform::raw:
      return "raw";
    case FeatureTransform::scaled:
      return "scaled";
    case FeatureTransform::log_scaled:
      return "log-scaled";
  }
  return "?";
}

FeatureTransform
feature_transform_from_name(const std::string& name)
{
  for (auto t : { FeatureTransform::raw, FeatureTransform::scaled,
                  FeatureTransform::log_scaled })
    if (name == feature_transform_name(t))
      return t;
  throw InvalidConfig("unknown feature transform '" + name + "'");
}

void
MlpConfig::validate() const
{
  if (k == 0)
    throw InvalidConfig("feature count k must be positive");
  for (auto w : hidden_widths)
    if (w == 0)
      throw InvalidConfig("hidden layer widths must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
    throw InvalidConfig("batch-norm momentum must be in [0, 1)");
  if (!(bn_eps > 0.0))
    throw InvalidConfig("batch-norm eps must be positive");
}

nlohmann::json
MlpConfig::to_json() const
{
  return { { "k", k },
           { "features", feature_transform_name(features) },
           { "hidden_widths", hidden_widths },
           { "batch_norm", batch_norm },
           { "output_activation", activation_name(output_activation) },
           { "bn_momentum", bn_momentum },
           { "bn_eps", bn_eps } };
}

MlpConfig
MlpConfig::from_json(const nlohmann::json& j)
{
  MlpConfig c;
  c.k = j.at("k").get<std::size_t>();
  c.features = feature_transform_from_name(j.at("features").get<std::string>());
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.batch_norm = j.at("batch_norm").get<bool>();
  c.output_activation =
    activation_from_name(j.at("output_activation").get<std::string>());
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_eps = j.at("bn_eps").get<double>();
  c.validate();
  return c;
}

Mlp::Mlp(MlpConfig config) : config_(std::move(config))
{
  config_.validate();
  std::size_t in = config_.k, off = 0, stats = 0;
  const std::size_t n_layers = config_.hidden_widths.size() + 1;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const bool last = l + 1 == n_layers;
    LayerLayout lay;
    lay.in = in;
    lay.out = last ? 1 : config_.hidden_widths[l];
    lay.w = off;
    off += lay.in * lay.out;
    lay.b = off;
    off += lay.out;
    lay.bn = !last && config_.batch_norm;
    if (lay.bn) {
      lay.gamma = off;
      off += lay.out;
      lay.beta = off;
      off += lay.out;
      lay.stats = stats;
      stats += lay.out;
    }
    lay.act = last ? config_.output_activation : Activation::relu;
    layers_.push_back(lay);
    in = lay.out;
  }
  params_.assign(off, 0.0);
  for (const auto& lay : layers_)
    if (lay.bn)
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(lay.gamma),
                  lay.out, 1.0);
  running_mean_.assign(stats, 0.0);
  running_var_.assign(stats, 1.0);
}

void
Mlp::init_he(Rng& rng)
{
  for (const auto& lay : layers_) {
    std::normal_distribution<double> w(0.0, std::sqrt(2.0 / static_cast<double>(lay.in)));
    for (std::size_t i = 0; i < lay.in * lay.out; ++i)
      params_[lay.w + i] = w(rng);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(lay.b), lay.out, 0.0);
    if (lay.bn) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(lay.gamma), lay.out, 1.0);
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(lay.beta), lay.out, 0.0);
    }
  }
  std::fill(running_mean_.begin(), running_mean_.end(), 0.0);
  std::fill(running_var_.begin(), running_var_.end(), 1.0);
}

std::vector<double>
Mlp::infer(std::span<const double> x, std::size_t m) const
{
  ForwardCache cache;
  forward_infer(*this, x, m, cache);
  const auto out = cache.output();
  return { out.begin(), out.end() };
}

bool
Mlp::all_finite() const
{
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return finite(params_) && finite(running_mean_) && finite(running_var_);
}

nlohmann::json
Mlp::to_json() const
{
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& lay : layers_) {
    nlohmann::json j{ { "in", lay.in },
                      { "out", lay.out },
                      { "activation", activation_name(lay.act) },
                      { "weight", slice(params_, lay.w, lay.in * lay.out) },
                      { "bias", slice(params_, lay.b, lay.out) } };
    if (lay.bn) {
      j["bn_gamma"] = slice(params_, lay.gamma, lay.out);
      j["bn_beta"] = slice(params_, lay.beta, lay.out);
      j["bn_running_mean"] = slice(running_mean_, lay.stats, lay.out);
      j["bn_running_var"] = slice(running_var_, lay.stats, lay.out);
    }
    layers.push_back(std::move(j));
  }
  return { { "config", config_.to_json() }, { "layers", layers } };
}

Mlp
Mlp::from_json(const nlohmann::json& j)
{
  try {
    Mlp m(MlpConfig::from_json(j.at("config")));
    const auto& layers = j.at("layers");
    if (layers.size() != m.layers_.size())
      throw FormatError("model layer count does not match its config");
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
      const auto& lay = m.layers_[l];
      const auto& src = layers[l];
      if (src.at("in").get<std::size_t>() != lay.in ||
          src.at("out").get<std::size_t>() != lay.out)
        throw FormatError("model layer " + std::to_string(l) +
                          " shape does not match its config");
      put(m.params_, lay.w, lay.in * lay.out, src.at("weight"), "weight");
      put(m.params_, lay.b, lay.out, src.at("bias"), "bias");
      if (lay.bn) {
        put(m.params_, lay.gamma, lay.out, src.at("bn_gamma"), "bn_gamma");
        put(m.params_, lay.beta, lay.out, src.at("bn_beta"), "bn_beta");
        put(m.running_mean_, lay.stats, lay.out, src.at("bn_running_mean"),
            "bn_running_mean");
        put(m.running_var_, lay.stats, lay.out, src.at("bn_running_var"),
            "bn_running_var");
      }
    }
    if (!m.all_finite())
      throw FormatError("model contains non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model: ") + e.what());
  }
}

void
forward(Mlp& model,
        std::span<const double> x,
        std::size_t m,
        Mode mode,
        ForwardCache& cache)
{
  const auto& cfg = model.config();
  if (x.size() != m * cfg.k)
    throw ShapeMismatch("feature block has " + std::to_string(x.size()) +
                        " values, expected " + std::to_string(m) + " x " +
                        std::to_string(cfg.k));
  if (mode == Mode::train && m < 2)
    throw ShapeMismatch("train-mode batch needs at least 2 rows");

  const auto& kern = simd::active_kernels();
  const auto& layers = model.layers();
  const double* p = model.params().data();
  const double mom = cfg.bn_momentum;
  const double md = static_cast<double>(m);

  cache.layers_.resize(layers.size());
  cache.input_ = x.data();
  cache.rows_ = m;
  const double* in = x.data();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& lay = layers[l];
    auto& lc = cache.layers_[l];
    const std::size_t n = lay.out;
    lc.z.resize(m * n);
    lc.a.resize(m * n);
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(p + lay.b, n, lc.z.data() + i * n);
    kern.gemm(m, n, lay.in, in, lay.in, p + lay.w, n, lc.z.data(), n, true);

    double* y = lc.a.data();
    if (lay.bn) {
      lc.xhat.resize(m * n);
      lc.inv_std.resize(n);
      double* rmean = model.running_mean().data() + lay.stats;
      double* rvar = model.running_var().data() + lay.stats;
      std::vector<double> mean(n, 0.0), var(n, 0.0);
      if (mode == Mode::train) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t c = 0; c < n; ++c)
            mean[c] += lc.z[i * n + c];
        for (std::size_t c = 0; c < n; ++c)
          mean[c] /= md;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t c = 0; c < n; ++c) {
            const double d = lc.z[i * n + c] - mean[c];
            var[c] += d * d;
          }
        for (std::size_t c = 0; c < n; ++c) {
          var[c] /= md;
          rmean[c] = mom * rmean[c] + (1.0 - mom) * mean[c];
          rvar[c] = mom * rvar[c] + (1.0 - mom) * (var[c] * md / (md - 1.0));
        }
      } else {
        std::copy_n(rmean, n, mean.begin());
        std::copy_n(rvar, n, var.begin());
      }
      for (std::size_t c = 0; c < n; ++c)
        lc.inv_std[c] = 1.0 / std::sqrt(var[c] + cfg.bn_eps);
      const double* gamma = p + lay.gamma;
      const double* beta = p + lay.beta;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < n; ++c) {
          const double h = (lc.z[i * n + c] - mean[c]) * lc.inv_std[c];
          lc.xhat[i * n + c] = h;
          y[i * n + c] = gamma[c] * h + beta[c];
        }
    } else {
      std::copy(lc.z.begin(), lc.z.end(), y);
    }
    if (lay.act == Activation::relu)
      for (std::size_t i = 0; i < m * n; ++i)
        y[i] = y[i] > 0.0 ? y[i] : 0.0;
    else if (lay.act == Activation::softplus)
      for (std::size_t i = 0; i < m * n; ++i)
        y[i] = y[i] > 0.0 ? y[i] + std::log1p(std::exp(-y[i]))
                          : std::log1p(std::exp(y[i]));
    else if (lay.act == Activation::exp)
      for (std::size_t i = 0; i < m * n; ++i)
        y[i] = std::exp(std::min(y[i], exp_clamp));
    in = y;
  }
  cache.out_ = in;
}

void
forward_infer(const Mlp& model,
              std::span<const double> x,
              std::size_t m,
              ForwardCache& cache)
{
  // Infer mode only reads the model.
  forward(const_cast<Mlp&>(model), x, m, Mode::infer, cache);
}

double
backward(const Mlp& model,
         ForwardCache& cache,
         std::span<const double> targets,
         Mode mode,
         std::vector<double>& grad)
{
  const std::size_t m = cache.rows_;
  if (targets.size() != m)
    throw LengthMismatch("got " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(m) + " rows");
  const auto& kern = simd::active_kernels();
  const auto& layers = model.layers();
  const double* p = model.params().data();
  const double md = static_cast<double>(m);
  grad.assign(model.params().size(), 0.0);

  double loss = 0.0;
  auto& d = cache.d_cur;
  d.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = cache.out_[i] - targets[i];
    loss += r * r;
    d[i] = 2.0 * r / md;
  }
  loss /= md;

  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& lay = layers[l];
    const auto& lc = cache.layers_[l];
    const std::size_t n = lay.out;
    // d: gradient w.r.t. this layer's activation output, m x n.
    if (lay.act == Activation::relu) {
      for (std::size_t i = 0; i < m * n; ++i)
        if (!(lc.a[i] > 0.0))
          d[i] = 0.0;
    } else if (lay.act == Activation::softplus) {
      // d softplus(x)/dx = 1 - e^-softplus(x)
      for (std::size_t i = 0; i < m * n; ++i)
        d[i] *= -std::expm1(-lc.a[i]);
    } else if (lay.act == Activation::exp) {
      // The pre-activation is not cached; a saturated unit has a = e^clamp.
      const double top = std::exp(exp_clamp);
      for (std::size_t i = 0; i < m * n; ++i)
        d[i] = lc.a[i] < top ? d[i] * lc.a[i] : 0.0;
    }
    if (lay.bn) {
      double* dgamma = grad.data() + lay.gamma;
      double* dbeta = grad.data() + lay.beta;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c < n; ++c) {
          dgamma[c] += d[i * n + c] * lc.xhat[i * n + c];
          dbeta[c] += d[i * n + c];
        }
      const double* gamma = p + lay.gamma;
      if (mode == Mode::train) {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t c = 0; c < n; ++c) {
            const double k = gamma[c] * lc.inv_std[c] / md;
            d[i * n + c] = k * (md * d[i * n + c] - dbeta[c] -
                                lc.xhat[i * n + c] * dgamma[c]);
          }
      } else {
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t c = 0; c < n; ++c)
            d[i * n + c] *= gamma[c] * lc.inv_std[c];
      }
    }
    // d is now dL/dz.
    double* db = grad.data() + lay.b;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < n; ++c)
        db[c] += d[i * n + c];
    const double* in = l == 0 ? cache.input_ : cache.layers_[l - 1].a.data();
    transpose(in, m, lay.in, cache.xt);
    kern.gemm(lay.in, n, m, cache.xt.data(), m, d.data(), n,
              grad.data() + lay.w, n, false);
    if (l > 0) {
      transpose(p + lay.w, lay.in, n, cache.wt);
      cache.d_next.resize(m * lay.in);
      kern.gemm(m, lay.in, n, d.data(), n, cache.wt.data(), lay.in,
                cache.d_next.data(), lay.in, false);
      std::swap(cache.d_cur, cache.d_next);
    }
  }
  return loss;
}

double
loss_and_gradients(Mlp& model,
                   std::span<const double> x,
                   std::span<const double> targets,
                   Mode mode,
                   std::vector<double>& grad,
                   ForwardCache& cache)
{
  const std::size_t k = model.config().k;
  if (x.size() % k != 0)
    throw ShapeMismatch("feature block is not a whole number of rows");
  forward(model, x, x.size() / k, mode, cache);
  const double loss = backward(model, cache, targets, mode, grad);
  if (!std::isfinite(loss))
    throw NonFiniteLoss("batch loss is " + std::to_string(loss));
  return loss;
}

} // namespace dde::nn
