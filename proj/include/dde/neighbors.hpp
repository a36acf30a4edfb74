#pragma once

#include "dde/sample_set.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace dde::neighbors {

/// m rows of k ascending Euclidean distances, row-major.
struct FeatureMatrix
{
  std::size_t k = 0;
  std::size_t rows = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t k)
    : k(k), rows(rows), values(rows * k)
  {}

  std::span<const double> row(std::size_t i) const
  {
    return { values.data() + i * k, k };
  }
  std::span<double> row(std::size_t i) { return { values.data() + i * k, k }; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Exact k-d tree: median split on the widest axis, leaves of at most 32
/// points stored axis-major so distances use the same kernel as the brute
/// force scan. Immutable after construction.
class KdTree
{
public:
  static constexpr std::size_t leaf_size = 32;

  explicit KdTree(const SampleSet& sample);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return index_.size(); }

  /// k smallest distances from q to points not coincident with q, ascending,
  /// ties broken by sample index. Writes the indices too when `idx` is
  /// non-empty. Throws InsufficientPoints.
  void query(std::span<const double> q,
             std::size_t k,
             std::span<double> dist,
             std::span<std::size_t> idx = {}) const;

  /// query() for every point of `queries`, one row each.
  FeatureMatrix query_all(const SampleSet& queries, std::size_t k) const;

private:
  struct Node
  {
    std::size_t begin = 0, end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1, right = -1;
  };
  struct Search;

  int build(std::size_t begin, std::size_t end, const std::vector<double>& pts);
  void visit(int node, double rd, Search& s) const;
  Search make_search(std::size_t k) const;
  void run(Search& s,
           std::span<const double> q,
           std::size_t k,
           std::span<double> dist,
           std::span<std::size_t> idx) const;

  std::size_t dim_ = 0;
  std::size_t widest_leaf_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> index_; // tree order -> sample index
  std::vector<double> soa_;        // per leaf: dim blocks of (end - begin)
};

KdTree
build_index(const SampleSet& sample);

/// Throws ShapeMismatch on dimension mismatch, InsufficientPoints when a
/// query has fewer than k non-coincident sample points.
FeatureMatrix
knn_distances(const KdTree& index, const SampleSet& queries, std::size_t k);

/// Exhaustive O(n m) reference with the same contract as knn_distances.
FeatureMatrix
brute_force_knn(const SampleSet& sample, const SampleSet& queries, std::size_t k);

/// CSV with header d_1,...,d_k.
void
write_feature_csv(const FeatureMatrix& f, const std::filesystem::path& path);
FeatureMatrix
read_feature_csv(const std::filesystem::path& path);

} // namespace dde::neighbors
