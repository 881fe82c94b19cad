#include <doctest.h>

#include <cmath>

#include "persona/rng.hpp"
#include "persona/stats.hpp"
#include "support/quadrature.hpp"

using namespace persona;
using persona::testing::f_sf_by_quadrature;
using persona::testing::t_two_sided_by_quadrature;

TEST_CASE("distribution tails agree with numerical integration") {
  Rng rng(1);
  for (int i = 0; i < 40; ++i) {
    const double dof = 1.0 + rng.uniform(0.0, 60.0);
    const double t = rng.uniform(-6.0, 6.0);
    INFO("t=" << t << " dof=" << dof);
    CHECK(std::fabs(student_t_two_sided_p(t, dof) - t_two_sided_by_quadrature(t, dof)) < 1e-8);
    CHECK(student_t_cdf(t, dof) + student_t_cdf(-t, dof) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int i = 0; i < 40; ++i) {
    const double d1 = 1.0 + static_cast<double>(rng.below(5)), d2 = 2.0 + static_cast<double>(rng.below(40));
    const double f = rng.uniform(0.01, 15.0);
    INFO("f=" << f << " d1=" << d1 << " d2=" << d2);
    CHECK(std::fabs(f_distribution_sf(f, d1, d2) - f_sf_by_quadrature(f, d1, d2)) < 1e-8);
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x; I_x(a, 1) = x^a
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(2.5, 1.0, 0.6) == doctest::Approx(std::pow(0.6, 2.5)).epsilon(1e-12));
}

TEST_CASE("worked examples") {
  std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  auto s = t_test(a, b, true);
  CHECK(s.dof == 4.0);
  CHECK(s.statistic == doctest::Approx(-3.0 / std::sqrt(2.0 / 3.0)));
  CHECK(s.p_value == doctest::Approx(t_two_sided_by_quadrature(s.statistic, 4.0)).epsilon(1e-9));
  // Identical spreads: Levene statistic 0 and the pooled test is chosen.
  auto c = compare_samples(a, b);
  CHECK(c.levene.statistic == 0.0);
  CHECK(c.levene.p_value == 1.0);
  CHECK(c.t.variant == TTestVariant::kStudent);

  std::vector<double> x = {1, 2, 3, 4}, y = {10, 20, 30, 40};
  auto l = levene_test(x, y);
  // |deviations| means 1 and 10, grand mean 5.5; between 162, within 101.
  CHECK(l.statistic == doctest::Approx(6.0 * 162.0 / 101.0));
  CHECK(l.df1 == 1.0);
  CHECK(l.df2 == 6.0);
  CHECK(l.p_value == doctest::Approx(f_sf_by_quadrature(l.statistic, 1.0, 6.0)).epsilon(1e-9));
  auto w = t_test(x, y, false);
  const double va = sample_variance(x) / 4.0, vb = sample_variance(y) / 4.0;
  CHECK(w.dof == doctest::Approx((va + vb) * (va + vb) / (va * va / 3.0 + vb * vb / 3.0)));
  CHECK(w.statistic == doctest::Approx((2.5 - 25.0) / std::sqrt(va + vb)));
}

TEST_CASE("identical groups are never significant") {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> g(2 + rng.below(20));
    for (auto& v : g) v = rng.normal();
    auto r = compare_samples(g, g);
    CHECK(r.levene.statistic == 0.0);
    CHECK(r.levene.p_value == 1.0);
    CHECK(r.t.statistic == 0.0);
    CHECK(r.t.p_value == 1.0);
  }
  std::vector<double> flat = {0.5, 0.5, 0.5};
  CHECK(compare_samples(flat, flat).t.p_value == 1.0);
}

TEST_CASE("invariances") {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> a(3 + rng.below(10)), b(3 + rng.below(10));
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 0.5 + 2.0 * rng.normal();
    auto base = compare_samples(a, b);
    auto swapped = compare_samples(b, a);
    CHECK(swapped.levene.p_value == doctest::Approx(base.levene.p_value).epsilon(1e-12));
    CHECK(swapped.t.p_value == doctest::Approx(base.t.p_value).epsilon(1e-12));
    CHECK(swapped.t.statistic == doctest::Approx(-base.t.statistic).epsilon(1e-12));

    const double k = rng.uniform(0.1, 10.0), shift = rng.uniform(-5.0, 5.0);
    auto sa = a, sb = b;
    for (auto& v : sa) v = k * v + shift;
    for (auto& v : sb) v = k * v + shift;
    auto scaled = compare_samples(sa, sb);
    CHECK(scaled.levene.p_value == doctest::Approx(base.levene.p_value).epsilon(1e-9));
    CHECK(scaled.t.p_value == doctest::Approx(base.t.p_value).epsilon(1e-9));
    CHECK(scaled.t.variant == base.t.variant);
    CHECK((base.t.variant == TTestVariant::kStudent) == (base.levene.p_value > kLeveneAlpha));
  }
}

TEST_CASE("p decreases as the groups separate") {
  std::vector<double> a = {0.1, 0.3, 0.2, 0.25, 0.15};
  double last = 1.0;
  for (double d : {0.0, 0.05, 0.1, 0.2, 0.4}) {
    std::vector<double> b = a;
    for (auto& v : b) v += d;
    const double p = compare_samples(a, b).t.p_value;
    CHECK(p <= last);
    last = p;
  }
  CHECK(last < 0.001);
}

TEST_CASE("input validation") {
  std::vector<double> one = {1.0}, two = {1.0, 2.0};
  CHECK_THROWS_AS(t_test(one, two, true), std::invalid_argument);
  CHECK_THROWS_AS(levene_test(two, one), std::invalid_argument);
  CHECK_THROWS_AS(student_t_two_sided_p(1.0, 0.0), std::invalid_argument);
}
