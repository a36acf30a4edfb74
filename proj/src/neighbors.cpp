#include "dde/neighbors.hpp"

#include "dde/error.hpp"
#include "dde/io.hpp"
#include "dde/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace dde::neighbors {
namespace {

using Candidate = std::pair<double, std::size_t>; // (squared distance, index)

// Both sides compute squared distances with the same rounding, but the
// incremental box bound is accumulated differently; the slack keeps pruning
// conservative.
constexpr double prune_slack = 1.0 + 1e-12;

class KBest
{
public:
  explicit KBest(std::size_t k) : k_(k) { heap_.reserve(k); }

  void clear() { heap_.clear(); }
  std::size_t size() const { return heap_.size(); }

  double worst() const
  {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity()
                             : heap_.front().first;
  }

  void offer(double d2, std::size_t idx)
  {
    if (d2 == 0.0)
      return;
    const Candidate c{ d2, idx };
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  void emit(std::size_t k,
            std::size_t available,
            std::span<double> dist,
            std::span<std::size_t> idx)
  {
    if (heap_.size() < k)
      throw InsufficientPoints(k, available);
    std::sort_heap(heap_.begin(), heap_.end());
    for (std::size_t j = 0; j < k; ++j) {
      dist[j] = std::sqrt(heap_[j].first);
      if (!idx.empty())
        idx[j] = heap_[j].second;
    }
  }

private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

void
check_k(std::size_t k)
{
  if (k == 0)
    throw InvalidConfig("neighbour count k must be positive");
}

} // namespace

struct KdTree::Search
{
  std::span<const double> q;
  std::vector<double> off;
  std::vector<double> d2;
  KBest best;
  std::size_t nonzero = 0;
};

KdTree::KdTree(const SampleSet& sample) : dim_(sample.dim())
{
  if (sample.empty())
    throw EmptySample("cannot index an empty sample");
  index_.resize(sample.size());
  std::iota(index_.begin(), index_.end(), std::size_t{ 0 });
  soa_.resize(sample.coords().size());
  nodes_.reserve(2 * (sample.size() / leaf_size + 1));
  build(0, sample.size(), sample.coords());
}

int
KdTree::build(std::size_t begin,
              std::size_t end,
              const std::vector<double>& pts)
{
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({ begin, end });

  std::size_t axis = 0;
  double spread = 0.0;
  if (end - begin > leaf_size) {
    for (std::size_t a = 0; a < dim_; ++a) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = pts[index_[i] * dim_ + a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > spread) {
        spread = hi - lo;
        axis = a;
      }
    }
  }

  if (spread == 0.0) {
    // Leaf: copy points axis-major. Zero-spread leaves may exceed leaf_size.
    const std::size_t count = end - begin;
    widest_leaf_ = std::max(widest_leaf_, count);
    double* block = soa_.data() + begin * dim_;
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t j = 0; j < count; ++j)
        block[a * count + j] = pts[index_[begin + j] * dim_ + a];
    return id;
  }

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin,
                   index_.begin() + mid,
                   index_.begin() + end,
                   [&](std::size_t x, std::size_t y) {
                     return pts[x * dim_ + axis] < pts[y * dim_ + axis];
                   });
  const double split = pts[index_[mid] * dim_ + axis];
  const int left = build(begin, mid, pts);
  const int right = build(mid, end, pts);
  Node& n = nodes_[id];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void
KdTree::visit(int node, double rd, Search& s) const
{
  const Node& n = nodes_[node];
  if (n.left < 0) {
    const std::size_t count = n.end - n.begin;
    simd::active_kernels().sq_distances(
      s.q.data(), dim_, soa_.data() + n.begin * dim_, count, count, s.d2.data());
    for (std::size_t j = 0; j < count; ++j) {
      s.nonzero += s.d2[j] != 0.0;
      s.best.offer(s.d2[j], index_[n.begin + j]);
    }
    return;
  }
  const double diff = s.q[n.axis] - n.split;
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  visit(near, rd, s);

  const double old = s.off[n.axis];
  const double far_rd = rd - old * old + diff * diff;
  if (far_rd <= s.best.worst() * prune_slack) {
    s.off[n.axis] = diff;
    visit(far, far_rd, s);
    s.off[n.axis] = old;
  }
}

KdTree::Search
KdTree::make_search(std::size_t k) const
{
  return { {}, std::vector<double>(dim_, 0.0), std::vector<double>(widest_leaf_),
           KBest(k), 0 };
}

void
KdTree::run(Search& s,
            std::span<const double> q,
            std::size_t k,
            std::span<double> dist,
            std::span<std::size_t> idx) const
{
  if (q.size() != dim_)
    throw ShapeMismatch("query dimension " + std::to_string(q.size()) +
                        " != index dimension " + std::to_string(dim_));
  s.q = q;
  s.best.clear();
  s.nonzero = 0;
  visit(0, 0.0, s);
  s.best.emit(k, s.nonzero, dist, idx);
}

void
KdTree::query(std::span<const double> q,
              std::size_t k,
              std::span<double> dist,
              std::span<std::size_t> idx) const
{
  check_k(k);
  Search s = make_search(k);
  run(s, q, k, dist, idx);
}

FeatureMatrix
KdTree::query_all(const SampleSet& queries, std::size_t k) const
{
  check_k(k);
  if (queries.dim() != dim_)
    throw ShapeMismatch("query dimension " + std::to_string(queries.dim()) +
                        " != sample dimension " + std::to_string(dim_));
  FeatureMatrix f(queries.size(), k);
  Search s = make_search(k);
  for (std::size_t i = 0; i < queries.size(); ++i)
    run(s, queries.point(i), k, f.row(i), {});
  return f;
}

KdTree
build_index(const SampleSet& sample)
{
  return KdTree(sample);
}

FeatureMatrix
knn_distances(const KdTree& index, const SampleSet& queries, std::size_t k)
{
  return index.query_all(queries, k);
}

FeatureMatrix
brute_force_knn(const SampleSet& sample, const SampleSet& queries, std::size_t k)
{
  check_k(k);
  if (queries.dim() != sample.dim())
    throw ShapeMismatch("query dimension " + std::to_string(queries.dim()) +
                        " != sample dimension " + std::to_string(sample.dim()));
  const std::size_t n = sample.size(), d = sample.dim();
  std::vector<double> soa(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      soa[a * n + i] = sample.coords()[i * d + a];

  FeatureMatrix f(queries.size(), k);
  std::vector<double> d2(n);
  std::vector<Candidate> cand;
  cand.reserve(n);
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    simd::active_kernels().sq_distances(
      queries.point(qi).data(), d, soa.data(), n, n, d2.data());
    cand.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (d2[i] != 0.0)
        cand.emplace_back(d2[i], i);
    if (cand.size() < k)
      throw InsufficientPoints(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    auto row = f.row(qi);
    for (std::size_t j = 0; j < k; ++j)
      row[j] = std::sqrt(cand[j].first);
  }
  return f;
}

void
write_feature_csv(const FeatureMatrix& f, const std::filesystem::path& path)
{
  io::CsvTable t;
  for (std::size_t j = 1; j <= f.k; ++j)
    t.header.push_back("d_" + std::to_string(j));
  t.rows.reserve(f.rows);
  for (std::size_t i = 0; i < f.rows; ++i) {
    const auto r = f.row(i);
    t.rows.emplace_back(r.begin(), r.end());
  }
  io::write_csv(path, t);
}

FeatureMatrix
read_feature_csv(const std::filesystem::path& path)
{
  const auto t = io::read_csv(path);
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] != "d_" + std::to_string(j + 1))
      throw FormatError(path.string() + ": expected column d_" +
                        std::to_string(j + 1));
  FeatureMatrix f(t.rows.size(), t.header.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    std::copy(t.rows[i].begin(), t.rows[i].end(), f.row(i).begin());
  return f;
}

} // namespace dde::neighbors
