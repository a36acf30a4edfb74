#include "dde/nn/model_io.hpp"

#include "dde/error.hpp"
#include "dde/io.hpp"

#include <string>

namespace dde::nn {

nlohmann::json
ModelFile::to_json() const
{
  auto j = model.to_json();
  j["version"] = model_version;
  j["features"] = { { "kind", "sorted_knn_distances" },
                    { "coordinates", "unit_range_bounding_box" },
                    { "scale", "n_pow_inv_d" } };
  j["train_config"] = train_config.to_json();
  j["train_meta"] = meta.to_json();
  return j;
}

ModelFile
ModelFile::from_json(const nlohmann::json& j)
{
  try {
    if (!j.contains("version") || j.at("version").get<std::string>() != model_version)
      throw FormatError("model file is not " + std::string(model_version));
    ModelFile m;
    m.model = Mlp::from_json(j);
    m.train_config = TrainConfig::from_json(j.at("train_config"));
    m.meta = TrainMeta::from_json(j.at("train_meta"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidConfig& e) {
    throw FormatError(std::string("invalid model config: ") + e.what());
  }
}

void
save_model(const ModelFile& m, const std::filesystem::path& path)
{
  io::write_text(path, m.to_json().dump() + "\n");
}

ModelFile
load_model(const std::filesystem::path& path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return ModelFile::from_json(j);
}

} // namespace dde::nn
