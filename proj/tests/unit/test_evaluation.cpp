#include "dde/error.hpp"
#include "dde/evaluation.hpp"

#include <doctest.h>

#include <sstream>

using namespace dde;
using namespace dde::eval;

TEST_SUITE("evaluation")
{
  TEST_CASE("estimator names")
  {
    for (auto k : { EstimatorKind::kde, EstimatorKind::dde, EstimatorKind::dde_smooth })
      CHECK(estimator_from_name(estimator_name(k)) == k);
    CHECK_THROWS_AS(estimator_from_name("fje"), InvalidConfig);
    Estimator e{ EstimatorKind::dde };
    SampleSet s(1, { 0.0, 1.0 });
    CHECK_THROWS_AS(self_estimate(e, s), InvalidConfig);
  }

  TEST_CASE("distribution expansion")
  {
    CHECK(expand_distribution("local-shape:all").size() == 9);
    const auto g = expand_distribution("gamma");
    REQUIRE(g.size() == 1);
    CHECK(g[0].id == "gamma");
    CHECK_THROWS_AS(expand_distribution("no-such-law"), InvalidConfig);
  }

  TEST_CASE("one report per estimator, same draw for every estimator")
  {
    const auto d = analytic_distribution("two-gaussians");
    const std::vector<Estimator> ests{ { EstimatorKind::kde }, { EstimatorKind::kde } };
    const auto r = evaluate_case(d, 400, 3, ests, {}, true);
    REQUIRE(r.reports.size() == 2);
    CHECK(r.reports[0].mse == r.reports[1].mse);
    CHECK(r.reports[0].ks_p == r.reports[1].ks_p);
    CHECK(r.reports[0].n == 400);
    CHECK(r.reports[0].d == 1);
    CHECK(r.reports[0].seed == 3);
    CHECK(r.reports[0].ks_p.has_value());
    CHECK(r.plot.x.size() == 2048);
    CHECK(r.plot.estimates.size() == 2);
    const auto again = evaluate_case(d, 400, 3, ests);
    CHECK(again.reports[0].mse == r.reports[0].mse);
    const auto other = evaluate_case(d, 400, 4, ests);
    CHECK(other.reports[0].mse != r.reports[0].mse);
  }

  TEST_CASE("reports sort by meta keys")
  {
    std::vector<metrics::EvalReport> rows(4);
    rows[0].estimator = "kde", rows[0].distribution = "b", rows[0].seed = 1;
    rows[1].estimator = "dde", rows[1].distribution = "z";
    rows[2].estimator = "kde", rows[2].distribution = "b", rows[2].seed = 0;
    rows[3].estimator = "kde", rows[3].distribution = "a", rows[3].n = 9;
    sort_reports(rows);
    CHECK(rows[0].estimator == "dde");
    CHECK(rows[1].distribution == "a");
    CHECK(rows[2].seed == 0);
    CHECK(rows[3].seed == 1);
  }

  TEST_CASE("local-shape table")
  {
    const auto t = local_shape_table(2000, 0, { { EstimatorKind::kde } });
    REQUIRE(t.values.size() == 1);
    REQUIRE(t.values[0].size() == 9);
    std::ostringstream os;
    write_local_shape_table(os, t);
    CHECK(os.str().find("Mean") != std::string::npos);
    CHECK(t.mean(0) > 0.5);
    CHECK(t.mean(0) < 1.2);
  }

  TEST_CASE("plot file names are path safe")
  {
    CHECK(plot_file_name("cauchy:b=0.5", 500, 2) == "plot_cauchy_b_0.5_n500_s2.csv");
  }
}
