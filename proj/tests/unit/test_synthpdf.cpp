#include "dde/error.hpp"
#include "dde/metrics.hpp"
#include "dde/synthpdf/dataset.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

using namespace dde;
using namespace dde::synthpdf;

namespace {

BaseFunctionSpec
spec(BaseKind k, double r = 0.5, double s = 2.0)
{
  BaseFunctionSpec b;
  b.kind = k;
  b.r = r;
  b.s = s;
  return b;
}

// Trapezoid rule on x = lo + w u^4 with a uniform u grid; a different
// grading from the library's, so the two are independent.
template <class F>
double
graded_integral(F f, double lo, double hi, std::size_t count)
{
  double sum = 0.0, prev_x = lo, prev_f = f(lo);
  for (std::size_t i = 1; i < count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(count - 1);
    const double x = lo + (hi - lo) * u * u * u * u;
    const double fx = f(x);
    sum += 0.5 * (fx + prev_f) * (x - prev_x);
    prev_x = x;
    prev_f = fx;
  }
  return sum;
}

} // namespace

TEST_SUITE("synthpdf")
{
  TEST_CASE("base function closed forms")
  {
    CHECK(eval_base(spec(BaseKind::identity), 1.5) == 1.5);
    CHECK(eval_base(spec(BaseKind::square), 1.5) == 2.25);
    CHECK(eval_base(spec(BaseKind::sqrt), 2.25) == 1.5);
    CHECK(eval_base(spec(BaseKind::s_minus_x), 0.5) == 1.5);
    CHECK(eval_base(spec(BaseKind::s2_minus_x2), 1.0) == 3.0);
    CHECK(eval_base(spec(BaseKind::s_minus_x_squared), 1.0) == 1.0);
    CHECK(eval_base(spec(BaseKind::sigmoid, 0.5), 2.0) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(eval_base(spec(BaseKind::capped_inverse), 0.0) == 1000.0);
    CHECK(eval_base(spec(BaseKind::inverse), 1.0) ==
          doctest::Approx(1.0 / (4.0 + base_epsilon)));
    CHECK(eval_base(spec(BaseKind::damped_linear, 0.1), 2.0) == doctest::Approx(2.5));
    CHECK(eval_base(spec(BaseKind::sin_plus_one), 0.0) == 1.0);
    CHECK(eval_base(spec(BaseKind::cos_plus_one), 0.0) == 2.0);
    CHECK(eval_base(spec(BaseKind::abs_cos), 0.0) == 1.0);
    // step_above: 1 if x > max(R, 0.6) S
    CHECK(eval_base(spec(BaseKind::step_above, 0.5), 1.1) == 0.0);
    CHECK(eval_base(spec(BaseKind::step_above, 0.5), 1.3) == 1.0);
    CHECK(eval_base(spec(BaseKind::step_below, 0.5), 0.7) == 1.0);
    CHECK(eval_base(spec(BaseKind::step_below, 0.5), 1.1) == 0.0);
  }

  TEST_CASE("gaussian row uses the tabulated (mu, sigma)")
  {
    for (std::uint8_t v = 0; v < gaussian_variant_count; ++v) {
      auto b = spec(BaseKind::gaussian, 0.8, 4.0);
      b.mu_sigma_variant = v;
      const auto ms = gaussian_mu_sigma(b);
      const double expect = 2 * 0.8 / std::sqrt(2 * M_PI * ms.sigma * ms.sigma);
      CHECK(eval_base(b, ms.mu) == doctest::Approx(expect));
    }
  }

  TEST_CASE("base_max on known rows")
  {
    CHECK(base_max(spec(BaseKind::square, 0.5, 3.0)) == 9.0);
    CHECK(base_max(spec(BaseKind::s_minus_x, 0.5, 3.0)) == 3.0);
    CHECK(base_max(spec(BaseKind::capped_inverse)) == 1000.0);
  }

  TEST_CASE("names and tags")
  {
    for (std::size_t i = 0; i < base_kind_count; ++i) {
      const auto k = static_cast<BaseKind>(i);
      CHECK(kind_from_name(kind_name(k)) == k);
      CHECK(!kind_tags(k).empty());
    }
    for (std::size_t i = 0; i < tag_count; ++i) {
      const auto t = static_cast<Tag>(i);
      CHECK(tag_from_name(tag_name(t)) == t);
    }
    CHECK(!kind_from_name("nope"));
    CHECK(alpha_value(BaseKind::min_capped_inverse, 2) == 4.0);
    CHECK_THROWS_AS(alpha_value(BaseKind::identity, 0), InvalidConfig);
  }

  TEST_CASE("tag filters restrict the drawn rows")
  {
    TagFilter f;
    f.include = { Tag::sinusoidal };
    const auto kinds = admitted_kinds(f);
    REQUIRE(!kinds.empty());
    Rng rng = make_rng(1);
    for (int i = 0; i < 300; ++i) {
      const auto b = sample_base_function(rng, 5.0, f);
      CHECK(kind_tags(b.kind).contains(Tag::sinusoidal));
      CHECK(b.r >= 0.0);
      CHECK(b.r <= 1.0);
    }
    TagFilter none;
    for (std::size_t i = 0; i < tag_count; ++i)
      none.exclude.insert(static_cast<Tag>(i));
    CHECK(admitted_kinds(none).empty());
    CHECK_THROWS_AS(sample_base_function(rng, 5.0, none), FilterEmpty);
    CHECK_THROWS_AS(sample_base_function(rng, 1.0, {}, 1e300), RetryExhausted);
  }

  TEST_CASE("expression evaluation and serialization")
  {
    const auto a = FunctionExpr::leaf(spec(BaseKind::identity), 0, 2);
    const auto b = FunctionExpr::leaf(spec(BaseKind::square), 1, 2);
    const auto sum = FunctionExpr::combine(Op::add, a, b);
    const auto prod = FunctionExpr::combine(Op::multiply, a, b);
    const double x[2] = { 1.5, 0.5 };
    CHECK(sum(x) == 1.75);
    CHECK(prod(x) == 0.375);
    CHECK(prod.leaf_count() == 2);
    CHECK(prod.combine_count() == 1);
    CHECK(FunctionExpr::from_json(prod.to_json()) == prod);
    CHECK(prod.axis_factors().size() == 2);
    CHECK(sum.axis_factors().empty());
  }

  TEST_CASE("compose_1d chain length and add-only regime")
  {
    Rng rng = make_rng(9);
    ComposeRules rules;
    for (std::size_t n_c = 2; n_c <= 7; ++n_c) {
      const auto e = compose_1d(rng, n_c, 3.0, rules);
      CHECK(e.leaf_count() == n_c);
      CHECK(e.combine_count() == n_c - 1);
    }
    rules.add_only = true;
    const double ext[4] = { 1, 2, 3, 4 };
    for (auto scheme : { Scheme::per_axis_then_combine, Scheme::build_d_dim_then_combine }) {
      const auto e = compose_highdim(rng, ext, 3, scheme, rules);
      CHECK(e.leaf_count() == 12);
      for (const auto& n : e.nodes())
        if (n.kind == FunctionExpr::Node::Kind::combine)
          CHECK(n.op == Op::add);
    }
  }

  TEST_CASE("graded nodes and trapezoid weights")
  {
    const auto nodes = graded_nodes({ 1.0, 4.0 }, 101);
    REQUIRE(nodes.size() == 101);
    CHECK(nodes.front() == 1.0);
    CHECK(nodes.back() == 4.0);
    CHECK(std::is_sorted(nodes.begin(), nodes.end()));
    const auto w = trapezoid_weights(nodes);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(3.0));
  }

  TEST_CASE("normalization constants")
  {
    // x on [0, 3]: z = 4.5
    const auto id = FunctionExpr::leaf(spec(BaseKind::identity), 0, 1);
    const auto p = normalize(id, { { 0.0, 3.0 } });
    CHECK(p.z == doctest::Approx(4.5).epsilon(1e-6));
    CHECK(p.density(1.0) == doctest::Approx(1.0 / 4.5).epsilon(1e-6));
    CHECK(p.density(3.5) == 0.0);

    // separable product x * y^2 on [0,2] x [0,3]: z = 2 * 9 = 18
    const auto prod = FunctionExpr::combine(
      Op::multiply, FunctionExpr::leaf(spec(BaseKind::identity), 0, 2),
      FunctionExpr::leaf(spec(BaseKind::square), 1, 2));
    const auto p2 = normalize(prod, { { 0.0, 2.0 }, { 0.0, 3.0 } });
    CHECK(p2.z == doctest::Approx(18.0).epsilon(1e-5));

    // 4D non-separable sum: Monte Carlo, z = 4 * 1/2 = 2
    FunctionExpr e = FunctionExpr::leaf(spec(BaseKind::identity), 0, 4);
    for (std::size_t a = 1; a < 4; ++a)
      e = FunctionExpr::combine(Op::add, e, FunctionExpr::leaf(spec(BaseKind::identity), a, 4));
    const auto p4 = normalize(e, std::vector<Interval>(4, { 0.0, 1.0 }));
    CHECK(p4.z_method == ZMethod::monte_carlo);
    CHECK(std::abs(p4.z - 2.0) < 5 * p4.z_rel_error * p4.z + 1e-12);

    const auto zero = FunctionExpr::leaf(spec(BaseKind::step_above, 0.0, 1.0), 0, 1);
    CHECK_THROWS_AS(normalize(zero, { { 0.0, 0.5 } }), DegeneratePdf);
  }

  TEST_CASE("rejection sampler draws 2x on [0,1]")
  {
    const auto id = FunctionExpr::leaf(spec(BaseKind::identity, 0.5, 1.0), 0, 1);
    const auto p = normalize(id, { { 0.0, 1.0 } });
    Rng rng = make_rng(11);
    RejectionStats st;
    const auto s = rejection_sample(p, 20000, rng, &st);
    REQUIRE(s.size() == 20000);
    CHECK(st.accepted == 20000);
    const auto xs = s.axis_values(0);
    const double d = metrics::ks_one_sample_statistic(xs, [](double x) { return x * x; });
    CHECK(d < 1.95 / std::sqrt(20000.0));
    for (std::size_t i = 0; i < 100; ++i)
      CHECK((*s.density_truth())[i] == doctest::Approx(2.0 * xs[i]).epsilon(1e-5));
  }

  TEST_CASE("unit-range coordinates and densities")
  {
    const auto id = FunctionExpr::leaf(spec(BaseKind::identity, 0.5, 4.0), 0, 1);
    const auto p = normalize(id, { { 0.0, 4.0 } });
    Rng rng = make_rng(12);
    const auto s = rejection_sample(p, 1000, rng);
    REQUIRE(s.scale().size() == 1);
    CHECK(s.scale()[0].width == 4.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double u = s.point(i)[0];
      CHECK(u >= 0.0);
      CHECK(u <= 1.0);
      CHECK((*s.density_truth())[i] ==
            doctest::Approx(p.density(4.0 * u) * 4.0).epsilon(1e-12));
    }
  }

  TEST_CASE("generated PDFs integrate to one")
  {
    GenerationConfig c;
    c.n_functions = 30;
    c.points_per_sample = 200;
    c.seed = 21;
    for (std::size_t i = 0; i < c.n_functions; ++i) {
      const auto g = generate_pdf(c, i);
      CAPTURE(i);
      const auto& iv = g.pdf.domain[0];
      const double m =
        graded_integral([&](double x) { return g.pdf.density(x); }, iv.lo, iv.hi, 16384);
      CHECK(m == doctest::Approx(1.0).epsilon(0.01));
      const auto leaves = g.pdf.expr.leaf_count();
      CHECK(leaves >= 2);
      CHECK(leaves <= 7);
      CHECK(iv.hi >= 1.0);
      CHECK(iv.hi <= 10.0);
    }
  }

  TEST_CASE("generation is deterministic and splits 3:1")
  {
    GenerationConfig c;
    c.n_functions = 8;
    c.points_per_sample = 100;
    c.seed = 7;
    const auto a = generate_dataset(c), b = generate_dataset(c);
    REQUIRE(a.items.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(a.items[i].pdf == b.items[i].pdf);
      CHECK(a.items[i].sample == b.items[i].sample);
    }
    CHECK(a.train.size() == 6);
    CHECK(a.validation.size() == 2);
    // PDF i depends only on (seed, i)
    CHECK(generate_pdf(c, 5).pdf == a.items[5].pdf);
  }

  TEST_CASE("include filter reaches every leaf")
  {
    GenerationConfig c;
    c.n_functions = 10;
    c.points_per_sample = 50;
    c.filter.include = { Tag::sinusoidal };
    const auto ds = generate_dataset(c);
    for (const auto& it : ds.items)
      for (const auto* leaf : it.pdf.expr.leaves())
        CHECK(kind_tags(leaf->spec.kind).contains(Tag::sinusoidal));
    CHECK(ds.config.to_json().at("include_tags").size() == 1);
  }

  TEST_CASE("config validation")
  {
    GenerationConfig c;
    c.dim = 0;
    CHECK_THROWS_AS(c.validated(), InvalidConfig);
    c.dim = 50;
    CHECK(c.validated().min_base_max == 0.01);
    c.dim = 1;
    c.filter.include = { Tag::step };
    c.filter.exclude = { Tag::step };
    CHECK_THROWS_AS(c.validated(), InvalidConfig);
    GenerationConfig d;
    d.scheme = Scheme::build_d_dim_then_combine;
    d.seed = 99;
    d.filter.exclude = { Tag::inverse };
    CHECK(GenerationConfig::from_json(d.to_json()).to_json() == d.to_json());
  }

  TEST_CASE("dataset directory round-trip")
  {
    GenerationConfig c;
    c.dim = 2;
    c.n_functions = 4;
    c.points_per_sample = 64;
    c.seed = 3;
    const auto ds = generate_dataset(c);
    const auto dir = std::filesystem::temp_directory_path() / "dde_ds_roundtrip";
    std::filesystem::remove_all(dir);
    write_dataset(ds, dir);
    const auto back = read_dataset(dir);
    REQUIRE(back.items.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(back.items[i].sample == ds.items[i].sample);
      CHECK(back.items[i].pdf == ds.items[i].pdf);
    }
    CHECK(back.train == ds.train);
    CHECK(back.validation == ds.validation);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(read_dataset(dir), FormatError);
  }
}
