#pragma once

#include "dde/nn/mlp.hpp"
#include "dde/nn/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string_view>

namespace dde::nn {

inline constexpr std::string_view model_version = "dde-model-v1";

struct ModelFile
{
  Mlp model;
  TrainConfig train_config;
  TrainMeta meta;

  nlohmann::json to_json() const;
  /// Throws FormatError on a wrong version or malformed content.
  static ModelFile from_json(const nlohmann::json& j);
};

void
save_model(const ModelFile& m, const std::filesystem::path& path);
ModelFile
load_model(const std::filesystem::path& path);

} // namespace dde::nn
