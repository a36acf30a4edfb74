#include "dde/nn/train.hpp"

#include "dde/error.hpp"
#include "dde/nn/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace dde::nn {
namespace {

constexpr std::size_t eval_chunk = 4096;

} // namespace

void
TrainConfig::validate() const
{
  if (!(lr0 > 0.0))
    throw InvalidConfig("lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    throw InvalidConfig("lr_decay must be in (0, 1]");
  if (batch_size < 2)
    throw InvalidConfig("batch_size must be at least 2");
  if (epochs == 0)
    throw InvalidConfig("epochs must be positive");
  if (ensemble_size == 0)
    throw InvalidConfig("ensemble_size must be at least 1");
  if (!(target_cap >= 0.0))
    throw InvalidConfig("target_cap must be non-negative");
}

nlohmann::json
TrainConfig::to_json() const
{
  return { { "lr0", lr0 },
           { "beta1", adam.beta1 },
           { "beta2", adam.beta2 },
           { "adam_eps", adam.eps },
           { "lr_decay", lr_decay },
           { "batch_size", batch_size },
           { "epochs", epochs },
           { "ensemble_size", ensemble_size },
           { "seed", seed },
           { "target_cap", target_cap } };
}

TrainConfig
TrainConfig::from_json(const nlohmann::json& j)
{
  TrainConfig c;
  c.lr0 = j.at("lr0").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.eps = j.at("adam_eps").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.ensemble_size = j.at("ensemble_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.target_cap = j.value("target_cap", 0.0);
  return c;
}

void
FeatureSet::append(const neighbors::FeatureMatrix& f,
                   const std::vector<double>& t)
{
  if (f.rows != t.size())
    throw LengthMismatch(std::to_string(f.rows) + " feature rows, " +
                         std::to_string(t.size()) + " targets");
  if (features.rows == 0)
    features.k = f.k;
  else if (features.k != f.k)
    throw ShapeMismatch("feature width changed while appending");
  features.values.insert(features.values.end(), f.values.begin(), f.values.end());
  features.rows += f.rows;
  targets.insert(targets.end(), t.begin(), t.end());
}

TrainingData
build_training_data(const synthpdf::Dataset& ds,
                    std::size_t k,
                    FeatureTransform transform)
{
  TrainingData data;
  auto add = [&](FeatureSet& set, std::size_t idx) {
    const auto& s = ds.items.at(idx).sample;
    if (!s.density_truth())
      throw FormatError("sample " + std::to_string(idx) +
                        " has no ground-truth densities");
    set.append(knn_features(s, s, k, transform), *s.density_truth());
  };
  for (auto i : ds.train)
    add(data.train, i);
  for (auto i : ds.validation)
    add(data.validation, i);
  return data;
}

nlohmann::json
TrainMeta::to_json() const
{
  nlohmann::json c = nlohmann::json::array();
  for (const auto& p : curve)
    c.push_back({ { "member", p.member },
                  { "epoch", p.epoch },
                  { "lr", p.lr },
                  { "train_mse", p.train_mse },
                  { "validation_mse", p.validation_mse } });
  return { { "seed", seed },
           { "epochs", epochs },
           { "ensemble_size", ensemble_size },
           { "selected_member", selected_member },
           { "selected_epoch", selected_epoch },
           { "best_validation_mse", best_validation_mse },
           { "diverged_members", diverged_members },
           { "curve", c } };
}

TrainMeta
TrainMeta::from_json(const nlohmann::json& j)
{
  TrainMeta m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs = j.at("epochs").get<std::size_t>();
  m.ensemble_size = j.at("ensemble_size").get<std::size_t>();
  m.selected_member = j.at("selected_member").get<std::size_t>();
  m.selected_epoch = j.at("selected_epoch").get<std::size_t>();
  m.best_validation_mse = j.at("best_validation_mse").get<double>();
  m.diverged_members =
    j.at("diverged_members").get<std::vector<std::size_t>>();
  for (const auto& p : j.at("curve"))
    m.curve.push_back({ p.at("member").get<std::size_t>(),
                        p.at("epoch").get<std::size_t>(),
                        p.at("lr").get<double>(),
                        p.at("train_mse").get<double>(),
                        p.at("validation_mse").get<double>() });
  return m;
}

double
evaluate_mse(const Mlp& model, const FeatureSet& set)
{
  const std::size_t k = set.features.k;
  ForwardCache cache;
  double sum = 0.0;
  for (std::size_t begin = 0; begin < set.rows(); begin += eval_chunk) {
    const std::size_t m = std::min(eval_chunk, set.rows() - begin);
    forward_infer(model,
                  std::span(set.features.values.data() + begin * k, m * k),
                  m,
                  cache);
    const auto y = cache.output();
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - set.targets[begin + i];
      sum += r * r;
    }
  }
  return set.rows() ? sum / static_cast<double>(set.rows()) : 0.0;
}

TrainResult
train(const TrainingData& data,
      const TrainConfig& train_cfg,
      const MlpConfig& mlp_cfg,
      const EpochCallback& on_epoch)
{
  train_cfg.validate();
  mlp_cfg.validate();
  if (data.train.rows() < 2)
    throw InvalidConfig("training set needs at least 2 feature rows");
  if (data.validation.rows() == 0)
    throw InvalidConfig("validation split is empty");
  if (data.train.features.k != mlp_cfg.k ||
      data.validation.features.k != mlp_cfg.k)
    throw ShapeMismatch("feature width does not match the network input k");

  const std::size_t k = mlp_cfg.k;
  const std::size_t n = data.train.rows();
  auto capped = [&](const std::vector<double>& t) {
    std::vector<double> c(t);
    if (train_cfg.target_cap > 0.0)
      for (auto& v : c)
        v = std::min(v, train_cfg.target_cap);
    return c;
  };
  const std::vector<double> train_targets = capped(data.train.targets);
  FeatureSet validation{ data.validation.features,
                         capped(data.validation.targets) };
  TrainResult result;
  result.meta.seed = train_cfg.seed;
  result.meta.epochs = train_cfg.epochs;
  result.meta.ensemble_size = train_cfg.ensemble_size;
  std::optional<Mlp> best;
  double best_mse = std::numeric_limits<double>::infinity();

  std::vector<double> xb(train_cfg.batch_size * k), tb(train_cfg.batch_size);
  std::vector<double> grad;
  ForwardCache cache;

  for (std::size_t member = 0; member < train_cfg.ensemble_size; ++member) {
    Rng rng = make_rng(child_seed(train_cfg.seed, member));
    Mlp model(mlp_cfg);
    model.init_he(rng);
    AdamState adam(model.params().size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{ 0 });

    bool diverged = false;
    double lr = train_cfg.lr0;
    for (std::size_t epoch = 0; epoch < train_cfg.epochs && !diverged; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double loss_sum = 0.0;
      std::size_t rows_seen = 0;
      try {
        for (std::size_t begin = 0; begin + 2 <= n; begin += train_cfg.batch_size) {
          const std::size_t m = std::min(train_cfg.batch_size, n - begin);
          if (m < 2)
            break;
          for (std::size_t i = 0; i < m; ++i) {
            const std::size_t r = order[begin + i];
            std::copy_n(data.train.features.values.data() + r * k, k,
                        xb.data() + i * k);
            tb[i] = train_targets[r];
          }
          const double loss = loss_and_gradients(
            model, std::span(xb.data(), m * k), std::span(tb.data(), m),
            Mode::train, grad, cache);
          adam_step(model.params(), grad, adam, lr, train_cfg.adam);
          loss_sum += loss * static_cast<double>(m);
          rows_seen += m;
        }
      } catch (const NonFiniteLoss&) {
        diverged = true;
        break;
      }
      const double val = evaluate_mse(model, validation);
      if (!std::isfinite(val) || !model.all_finite()) {
        diverged = true;
        break;
      }
      const CurvePoint point{ member, epoch, lr,
                              loss_sum / static_cast<double>(rows_seen), val };
      result.meta.curve.push_back(point);
      if (on_epoch)
        on_epoch(point);
      if (val < best_mse) {
        best_mse = val;
        best = model;
        result.meta.selected_member = member;
        result.meta.selected_epoch = epoch;
      }
      lr *= train_cfg.lr_decay;
    }
    if (diverged)
      result.meta.diverged_members.push_back(member);
  }
  if (result.meta.diverged_members.size() == train_cfg.ensemble_size || !best)
    throw AllDiverged("all " + std::to_string(train_cfg.ensemble_size) +
                      " ensemble members diverged");
  result.meta.best_validation_mse = best_mse;
  result.model = std::move(*best);
  return result;
}

} // namespace dde::nn
