#pragma once

#include "dde/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dde::nn {

enum class Activation
{
  relu,
  softplus, // log(1 + e^x): strictly positive, ReLU-like for large x
  exp,
  linear,
};

const char*
activation_name(Activation a);
/// Throws InvalidConfig for unknown names.
Activation
activation_from_name(const std::string& name);

/// How sorted k-NN distances (unit-range coordinates) become network inputs.
enum class FeatureTransform
{
  raw,        // distances as measured
  scaled,     // distances * n^(1/d), n the sample size
  log_scaled, // log(distances * n^(1/d))
};

const char*
feature_transform_name(FeatureTransform t);
FeatureTransform
feature_transform_from_name(const std::string& name);

struct MlpConfig
{
  std::size_t k = 128;
  FeatureTransform features = FeatureTransform::log_scaled;
  std::vector<std::size_t> hidden_widths{ 128, 256, 512, 256, 128,
                                          64,  32,  16,  8 };
  /// Batch norm after every hidden layer (not after the output layer).
  bool batch_norm = true;
  /// Activation of the scalar output unit. relu, softplus and exp keep
  /// estimates non-negative.
  Activation output_activation = Activation::relu;
  /// running = momentum * running + (1 - momentum) * batch.
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;

  /// Throws InvalidConfig.
  void validate() const;

  nlohmann::json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

enum class Mode
{
  train, // batch statistics, running statistics updated
  infer, // running statistics
};

/// Offsets of one affine layer (and its batch norm) inside the flat
/// parameter vector. W is in x out, row-major.
struct LayerLayout
{
  std::size_t in = 0, out = 0;
  std::size_t w = 0, b = 0;
  bool bn = false;
  std::size_t gamma = 0, beta = 0;
  std::size_t stats = 0; // offset into running mean/var
  Activation act = Activation::relu;

  friend bool operator==(const LayerLayout&, const LayerLayout&) = default;
};

class ForwardCache;

class Mlp
{
public:
  Mlp() = default;
  /// All weights zero, gamma 1, running variance 1.
  explicit Mlp(MlpConfig config);

  /// Gaussian weights with variance 2 / fan_in; biases and beta 0, gamma 1.
  void init_he(Rng& rng);

  const MlpConfig& config() const { return config_; }
  const std::vector<LayerLayout>& layers() const { return layers_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& running_mean() { return running_mean_; }
  const std::vector<double>& running_mean() const { return running_mean_; }
  std::vector<double>& running_var() { return running_var_; }
  const std::vector<double>& running_var() const { return running_var_; }

  /// Inference-mode outputs for m rows of k features. Pure.
  std::vector<double> infer(std::span<const double> x, std::size_t m) const;

  bool all_finite() const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

  friend bool operator==(const Mlp&, const Mlp&) = default;

private:
  MlpConfig config_;
  std::vector<LayerLayout> layers_;
  std::vector<double> params_;
  std::vector<double> running_mean_;
  std::vector<double> running_var_;
};

/// Per-batch activations and backward scratch, reused across batches.
class ForwardCache
{
public:
  std::span<const double> output() const { return { out_, rows_ }; }
  std::size_t rows() const { return rows_; }

private:
  friend void forward(Mlp&, std::span<const double>, std::size_t, Mode,
                      ForwardCache&);
  friend void forward_infer(const Mlp&, std::span<const double>, std::size_t,
                            ForwardCache&);
  friend double backward(const Mlp&, ForwardCache&, std::span<const double>,
                         Mode, std::vector<double>&);

  struct LayerCache
  {
    std::vector<double> z;    // x W + b
    std::vector<double> xhat; // normalized z (bn layers)
    std::vector<double> a;    // activation output
    std::vector<double> inv_std;
  };

  const double* input_ = nullptr;
  const double* out_ = nullptr;
  std::size_t rows_ = 0;
  std::vector<LayerCache> layers_;
  // backward scratch
  std::vector<double> d_cur, d_next, xt, wt;
};

/// Forward pass. Train mode needs m >= 2 and updates the running statistics.
/// Throws ShapeMismatch when x.size() != m * k.
void
forward(Mlp& model,
        std::span<const double> x,
        std::size_t m,
        Mode mode,
        ForwardCache& cache);

void
forward_infer(const Mlp& model,
              std::span<const double> x,
              std::size_t m,
              ForwardCache& cache);

/// Mean squared error of the cached forward pass against targets, and its
/// gradient with respect to every parameter (same layout as params()). `mode`
/// must match the forward pass.
double
backward(const Mlp& model,
         ForwardCache& cache,
         std::span<const double> targets,
         Mode mode,
         std::vector<double>& grad);

/// forward + backward. Throws NonFiniteLoss when the loss is not finite.
double
loss_and_gradients(Mlp& model,
                   std::span<const double> x,
                   std::span<const double> targets,
                   Mode mode,
                   std::vector<double>& grad,
                   ForwardCache& cache);

} // namespace dde::nn
