#include "dde/error.hpp"
#include "dde/nn/estimate.hpp"
#include "dde/nn/model_io.hpp"
#include "dde/nn/train.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace dde;
using namespace dde::nn;

namespace {

const synthpdf::Dataset&
small_dataset()
{
  static const synthpdf::Dataset ds = [] {
    synthpdf::GenerationConfig c;
    c.n_functions = 12;
    c.points_per_sample = 200;
    c.seed = 5;
    return synthpdf::generate_dataset(c);
  }();
  return ds;
}

MlpConfig
small_net()
{
  MlpConfig c;
  c.k = 8;
  c.hidden_widths = { 16, 8 };
  return c;
}

TrainConfig
short_run()
{
  TrainConfig t;
  t.epochs = 3;
  t.ensemble_size = 2;
  t.batch_size = 256;
  t.seed = 11;
  return t;
}

} // namespace

TEST_SUITE("train")
{
  TEST_CASE("features follow the transform")
  {
    const auto& s = small_dataset().items[0].sample;
    const auto raw = knn_features(s, s, 4, FeatureTransform::raw);
    const auto sc = knn_features(s, s, 4, FeatureTransform::scaled);
    const auto lg = knn_features(s, s, 4, FeatureTransform::log_scaled);
    const double f = feature_scale(s.size(), 1);
    CHECK(f == 200.0);
    CHECK(feature_scale(1000, 3) == doctest::Approx(10.0));
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
      CHECK(sc.values[i] == raw.values[i] * f);
      CHECK(lg.values[i] == std::log(raw.values[i] * f));
    }
  }

  TEST_CASE("training data follows the dataset split")
  {
    const auto& ds = small_dataset();
    const auto data = build_training_data(ds, 8, FeatureTransform::log_scaled);
    CHECK(data.train.rows() == ds.train.size() * 200);
    CHECK(data.validation.rows() == ds.validation.size() * 200);
    CHECK(data.train.features.k == 8);
    CHECK(data.train.targets.front() == (*ds.items[ds.train[0]].sample.density_truth())[0]);
  }

  TEST_CASE("training is deterministic and selects the best checkpoint")
  {
    const auto data = build_training_data(small_dataset(), 8, FeatureTransform::log_scaled);
    const auto a = train(data, short_run(), small_net());
    const auto b = train(data, short_run(), small_net());
    CHECK(a.model == b.model);
    REQUIRE(a.meta.curve.size() == 6);
    double best = INFINITY;
    std::size_t member = 0, epoch = 0;
    for (const auto& p : a.meta.curve)
      if (p.validation_mse < best) {
        best = p.validation_mse;
        member = p.member;
        epoch = p.epoch;
      }
    CHECK(a.meta.best_validation_mse == best);
    CHECK(a.meta.selected_member == member);
    CHECK(a.meta.selected_epoch == epoch);
    CHECK(a.meta.curve[1].lr == doctest::Approx(1e-3 * 0.95));
    // validation MSE is measured against capped targets
    FeatureSet capped = data.validation;
    for (auto& t : capped.targets)
      t = std::min(t, 50.0);
    CHECK(evaluate_mse(a.model, capped) == doctest::Approx(best).epsilon(1e-12));

    auto other = short_run();
    other.seed = 12;
    CHECK(!(train(data, other, small_net()).model == a.model));
  }

  TEST_CASE("all members diverging is an error")
  {
    auto data = build_training_data(small_dataset(), 8, FeatureTransform::log_scaled);
    data.train.targets[3] = std::numeric_limits<double>::infinity();
    auto t = short_run();
    t.target_cap = 0.0;
    CHECK_THROWS_AS(train(data, t, small_net()), AllDiverged);
  }

  TEST_CASE("config checks")
  {
    TrainConfig t;
    t.batch_size = 1;
    CHECK_THROWS_AS(t.validate(), InvalidConfig);
    t = {};
    t.lr_decay = 0.0;
    CHECK_THROWS_AS(t.validate(), InvalidConfig);
    t = {};
    t.ensemble_size = 0;
    CHECK_THROWS_AS(t.validate(), InvalidConfig);
    const auto data = build_training_data(small_dataset(), 8, FeatureTransform::log_scaled);
    auto net = small_net();
    net.k = 9;
    CHECK_THROWS_AS(train(data, short_run(), net), ShapeMismatch);
  }

  TEST_CASE("model file round-trip")
  {
    const auto data = build_training_data(small_dataset(), 8, FeatureTransform::log_scaled);
    auto r = train(data, short_run(), small_net());
    ModelFile mf{ r.model, short_run(), r.meta };
    const auto path = std::filesystem::temp_directory_path() / "dde_model_rt.json";
    save_model(mf, path);
    const auto back = load_model(path);
    CHECK(back.model == mf.model);
    CHECK(back.meta.curve.size() == mf.meta.curve.size());
    CHECK(back.meta.selected_epoch == mf.meta.selected_epoch);
    CHECK(back.train_config.to_json() == mf.train_config.to_json());
    auto j = mf.to_json();
    CHECK(j.at("version") == "dde-model-v1");
    j["version"] = "other";
    CHECK_THROWS_AS(ModelFile::from_json(j), FormatError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), FormatError);
  }

  TEST_CASE("estimates are equivariant under affine maps of the sample")
  {
    const auto data = build_training_data(small_dataset(), 8, FeatureTransform::log_scaled);
    const auto r = train(data, short_run(), small_net());
    const auto& unit = small_dataset().items[0].sample;
    SampleSet scaled(1);
    for (std::size_t i = 0; i < unit.size(); ++i) {
      const double x = 3.0 + 7.0 * unit.point(i)[0];
      scaled.push_back(std::span(&x, 1));
    }
    const auto a = estimate(r.model, unit);
    const auto b = estimate(r.model, scaled);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(b[i] * 7.0 == doctest::Approx(a[i]).epsilon(1e-9));
    CHECK_THROWS_AS(estimate(r.model, SampleSet(1, { 0.0, 1.0, 2.0 })), InsufficientPoints);
  }
}
