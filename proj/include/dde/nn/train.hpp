#pragma once

#include "dde/neighbors.hpp"
#include "dde/nn/adam.hpp"
#include "dde/nn/mlp.hpp"
#include "dde/synthpdf/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace dde::nn {

struct TrainConfig
{
  double lr0 = 1e-3;
  AdamConfig adam;
  /// Step size multiplier applied after every epoch.
  double lr_decay = 0.95;
  std::size_t batch_size = 1024;
  std::size_t epochs = 100;
  std::size_t ensemble_size = 5;
  std::uint64_t seed = 0;
  /// Training and validation targets are clipped to this unit-range
  /// density; 0 disables clipping.
  double target_cap = 50.0;

  /// Throws InvalidConfig.
  void validate() const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Feature rows and unit-range density targets.
struct FeatureSet
{
  neighbors::FeatureMatrix features;
  std::vector<double> targets;

  std::size_t rows() const { return features.rows; }
  void append(const neighbors::FeatureMatrix& f, const std::vector<double>& t);
};

struct TrainingData
{
  FeatureSet train;
  FeatureSet validation;
};

/// Self-query features of every sample in the dataset (unit-range
/// coordinates), split per the dataset's train/validation indices.
TrainingData
build_training_data(const synthpdf::Dataset& ds,
                    std::size_t k,
                    FeatureTransform transform);

struct CurvePoint
{
  std::size_t member = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
};

struct TrainMeta
{
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t ensemble_size = 0;
  std::size_t selected_member = 0;
  std::size_t selected_epoch = 0;
  double best_validation_mse = 0.0;
  std::vector<std::size_t> diverged_members;
  std::vector<CurvePoint> curve;

  nlohmann::json to_json() const;
  static TrainMeta from_json(const nlohmann::json& j);
};

struct TrainResult
{
  Mlp model;
  TrainMeta meta;
};

using EpochCallback = std::function<void(const CurvePoint&)>;

/// Trains ensemble_size members from independent seeded initializations and
/// returns the (member, epoch) checkpoint with the lowest validation MSE.
/// Throws AllDiverged when every member produced a non-finite loss.
TrainResult
train(const TrainingData& data,
      const TrainConfig& train_cfg,
      const MlpConfig& mlp_cfg,
      const EpochCallback& on_epoch = {});

/// Inference-mode MSE over a feature set.
double
evaluate_mse(const Mlp& model, const FeatureSet& set);

} // namespace dde::nn
