#include "dde/nn/estimate.hpp"

#include "dde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dde::nn {
namespace {

constexpr std::size_t infer_chunk = 4096;

} // namespace

double
feature_scale(std::size_t n, std::size_t d)
{
  return std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
}

neighbors::FeatureMatrix
knn_features(const SampleSet& sample,
             const SampleSet& queries,
             std::size_t k,
             FeatureTransform transform)
{
  const neighbors::KdTree tree(sample);
  auto f = tree.query_all(queries, k);
  if (transform == FeatureTransform::raw)
    return f;
  const double s = feature_scale(sample.size(), sample.dim());
  for (auto& v : f.values)
    v *= s;
  if (transform == FeatureTransform::log_scaled)
    for (auto& v : f.values)
      v = std::log(v);
  return f;
}

std::vector<double>
estimate(const Mlp& model, const SampleSet& sample, const SampleSet& queries)
{
  if (sample.dim() != queries.dim())
    throw ShapeMismatch("sample dimension " + std::to_string(sample.dim()) +
                        " != query dimension " + std::to_string(queries.dim()));
  if (sample.empty())
    throw EmptySample("cannot estimate from an empty sample");
  const auto box = sample.bounding_scale();
  const SampleSet unit_sample = sample.mapped_to_unit(box);
  const SampleSet unit_queries = queries.mapped_to_unit(box);
  const auto f = knn_features(unit_sample, unit_queries, model.config().k,
                              model.config().features);

  double volume = 1.0;
  for (const auto& s : box)
    volume *= s.width;

  std::vector<double> out(queries.size());
  ForwardCache cache;
  const std::size_t k = f.k;
  for (std::size_t begin = 0; begin < f.rows; begin += infer_chunk) {
    const std::size_t m = std::min(infer_chunk, f.rows - begin);
    forward_infer(model,
                  std::span(f.values.data() + begin * k, m * k),
                  m,
                  cache);
    const auto y = cache.output();
    for (std::size_t i = 0; i < m; ++i)
      out[begin + i] = y[i] / volume;
  }
  return out;
}

std::vector<double>
estimate(const Mlp& model, const SampleSet& sample)
{
  return estimate(model, sample, sample);
}

} // namespace dde::nn
