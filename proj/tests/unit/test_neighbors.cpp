#include "dde/error.hpp"
#include "dde/neighbors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace dde;
using namespace dde::neighbors;

namespace {

SampleSet
random_sample(std::mt19937_64& rng, std::size_t n, std::size_t d, bool lattice = false)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(n * d);
  for (auto& v : pts)
    v = lattice ? std::floor(u(rng) * 6.0) / 6.0 : u(rng);
  return SampleSet(d, std::move(pts));
}

// Sorted distances by definition, without the library's kernels.
std::vector<double>
oracle_row(const SampleSet& s, std::span<const double> q, std::size_t k)
{
  std::vector<std::pair<double, std::size_t>> c;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < s.dim(); ++a) {
      const double diff = q[a] - s.point(i)[a];
      d2 += diff * diff;
    }
    if (d2 != 0.0)
      c.emplace_back(d2, i);
  }
  std::sort(c.begin(), c.end());
  std::vector<double> r(k);
  for (std::size_t j = 0; j < k; ++j)
    r[j] = std::sqrt(c[j].first);
  return r;
}

} // namespace

TEST_SUITE("neighbors")
{
  TEST_CASE("tree search equals brute force bitwise")
  {
    std::mt19937_64 rng(17);
    for (int inst = 0; inst < 120; ++inst) {
      const std::size_t d = std::vector<std::size_t>{ 1, 2, 3, 5, 10 }[inst % 5];
      const std::size_t n = 100 + rng() % 600;
      const std::size_t k = 1 + rng() % 64;
      const bool lattice = inst % 7 == 0 && d <= 3; // heavy ties and duplicates
      const auto s = random_sample(rng, n, d, lattice);
      const auto q = inst % 2 ? s : random_sample(rng, 50, d, lattice);
      CAPTURE(inst);
      try {
        const auto a = knn_distances(build_index(s), q, k);
        const auto b = brute_force_knn(s, q, k);
        CHECK(a == b);
      } catch (const InsufficientPoints&) {
        CHECK_THROWS_AS(brute_force_knn(s, q, k), InsufficientPoints);
      }
    }
  }

  TEST_CASE("brute force agrees with the definition")
  {
    std::mt19937_64 rng(5);
    const auto s = random_sample(rng, 300, 3);
    const auto q = random_sample(rng, 20, 3);
    const auto f = brute_force_knn(s, q, 16);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const auto o = oracle_row(s, q.point(i), 16);
      for (std::size_t j = 0; j < 16; ++j)
        CHECK(f.row(i)[j] == doctest::Approx(o[j]).epsilon(1e-14));
    }
  }

  TEST_CASE("rows are sorted and positive")
  {
    std::mt19937_64 rng(8);
    const auto s = random_sample(rng, 500, 2);
    const auto f = knn_distances(KdTree(s), s, 32);
    for (std::size_t i = 0; i < f.rows; ++i) {
      const auto r = f.row(i);
      CHECK(std::is_sorted(r.begin(), r.end()));
      CHECK(r[0] > 0.0);
    }
  }

  TEST_CASE("coincident points are skipped, other duplicates kept")
  {
    // points 0, 0, 1, 1, 3 on a line; query at 0
    SampleSet s(1, { 0.0, 0.0, 1.0, 1.0, 3.0 });
    const KdTree t(s);
    std::vector<double> d(3);
    std::vector<std::size_t> idx(3);
    const double q = 0.0;
    t.query(std::span(&q, 1), 3, d, idx);
    CHECK(d == std::vector<double>{ 1.0, 1.0, 3.0 });
    CHECK(idx == std::vector<std::size_t>{ 2, 3, 4 }); // ties by index
    CHECK_THROWS_AS(t.query(std::span(&q, 1), 4, d, {}), InsufficientPoints);
    try {
      std::vector<double> d4(4);
      t.query(std::span(&q, 1), 4, d4, {});
    } catch (const InsufficientPoints& e) {
      CHECK(e.needed() == 4);
      CHECK(e.available() == 3);
    }
  }

  TEST_CASE("large zero-spread clusters")
  {
    std::vector<double> pts(200, 0.5);
    pts.push_back(0.25);
    pts.push_back(0.9);
    SampleSet s(1, pts);
    const auto f = knn_distances(build_index(s), s, 2);
    CHECK(f == brute_force_knn(s, s, 2));
    CHECK(f.row(0)[0] == 0.25);
    CHECK(f.row(0)[1] == doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("argument errors")
  {
    std::mt19937_64 rng(1);
    const auto s = random_sample(rng, 50, 2);
    const auto q3 = random_sample(rng, 5, 3);
    CHECK_THROWS_AS(knn_distances(KdTree(s), q3, 3), ShapeMismatch);
    CHECK_THROWS_AS(brute_force_knn(s, q3, 3), ShapeMismatch);
    CHECK_THROWS_AS(knn_distances(KdTree(s), s, 0), InvalidConfig);
    CHECK_THROWS_AS(KdTree(SampleSet(2)), EmptySample);
    CHECK_THROWS_AS(knn_distances(KdTree(s), s, 50), InsufficientPoints);
    CHECK_NOTHROW(knn_distances(KdTree(s), s, 49));
  }

  TEST_CASE("feature csv round-trip")
  {
    std::mt19937_64 rng(2);
    const auto s = random_sample(rng, 80, 2);
    const auto f = knn_distances(KdTree(s), s, 5);
    const auto path = std::filesystem::temp_directory_path() / "dde_features.csv";
    write_feature_csv(f, path);
    CHECK(read_feature_csv(path) == f);
    std::filesystem::remove(path);
  }
}
