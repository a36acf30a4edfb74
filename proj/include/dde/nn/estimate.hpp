#pragma once

#include "dde/neighbors.hpp"
#include "dde/nn/mlp.hpp"
#include "dde/sample_set.hpp"

#include <cstddef>
#include <vector>

namespace dde::nn {

/// Multiplier applied to unit-range k-NN distances of an n-point sample in d
/// dimensions: n^(1/d). It makes features of samples of different sizes drawn
/// from the same law comparable.
double
feature_scale(std::size_t n, std::size_t d);

/// Sorted k-NN distances from each query to `sample` (both already in
/// unit-range coordinates), passed through `transform`.
neighbors::FeatureMatrix
knn_features(const SampleSet& sample,
             const SampleSet& queries,
             std::size_t k,
             FeatureTransform transform);

/// Density estimates at `queries` from `sample`, both in original
/// coordinates: map to the sample's bounding box, extract features, run the
/// network in inference mode, divide by the box volume. Throws
/// InsufficientPoints, ShapeMismatch, DegenerateSample (zero-extent axis).
std::vector<double>
estimate(const Mlp& model, const SampleSet& sample, const SampleSet& queries);

/// Self-estimation: queries = sample.
std::vector<double>
estimate(const Mlp& model, const SampleSet& sample);

} // namespace dde::nn
