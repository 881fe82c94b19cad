#include "persona/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace persona {

namespace {

constexpr double kFpMin = 1e-300;
constexpr double kEps = 1e-16;
constexpr int kMaxTerms = 100000;

// Continued fraction for I_x(a, b), valid for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a and b must be positive");
  if (std::isnan(x)) return x;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return 0.0;
  return std::clamp(regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t)), 0.0, 1.0);
}

double student_t_cdf(double t, double dof) {
  const double tail = student_t_two_sided_p(t, dof) / 2.0;
  return t >= 0.0 ? 1.0 - tail : tail;
}

double f_distribution_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw std::invalid_argument("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) return f;
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return std::clamp(regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)), 0.0, 1.0);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("variance needs at least two values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double sample_stddev(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

LeveneResult levene_test(std::span<const double> group_a, std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) throw std::invalid_argument("levene_test: groups need >= 2 values");
  const std::span<const double> groups[2] = {group_a, group_b};
  std::vector<double> z[2];
  double zbar[2];
  double total = 0.0;
  std::size_t n = 0;
  for (int g = 0; g < 2; ++g) {
    const double m = mean(groups[g]);
    for (double v : groups[g]) z[g].push_back(std::fabs(v - m));
    zbar[g] = mean(z[g]);
    total += std::accumulate(z[g].begin(), z[g].end(), 0.0);
    n += z[g].size();
  }
  const double grand = total / static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (int g = 0; g < 2; ++g) {
    between += static_cast<double>(z[g].size()) * (zbar[g] - grand) * (zbar[g] - grand);
    for (double v : z[g]) within += (v - zbar[g]) * (v - zbar[g]);
  }
  LeveneResult r;
  r.df1 = 1.0;
  r.df2 = static_cast<double>(n) - 2.0;
  if (within == 0.0) {
    // Both groups have constant absolute deviations.
    r.statistic = between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    r.p_value = between == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = r.df2 * between / within;
  r.p_value = f_distribution_sf(r.statistic, r.df1, r.df2);
  return r;
}

std::string_view to_string(TTestVariant v) { return v == TTestVariant::kStudent ? "student" : "welch"; }

TTestResult t_test(std::span<const double> group_a, std::span<const double> group_b, bool equal_variance) {
  if (group_a.size() < 2 || group_b.size() < 2) throw std::invalid_argument("t_test: groups need >= 2 values");
  const double n1 = static_cast<double>(group_a.size()), n2 = static_cast<double>(group_b.size());
  const double m1 = mean(group_a), m2 = mean(group_b);
  const double v1 = sample_variance(group_a), v2 = sample_variance(group_b);
  TTestResult r;
  r.variant = equal_variance ? TTestVariant::kStudent : TTestVariant::kWelch;
  double se2;
  if (equal_variance) {
    r.dof = n1 + n2 - 2.0;
    const double pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / r.dof;
    se2 = pooled * (1.0 / n1 + 1.0 / n2);
  } else {
    const double a = v1 / n1, b = v2 / n2;
    se2 = a + b;
    r.dof = se2 > 0.0 ? se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0)) : n1 + n2 - 2.0;
  }
  if (se2 == 0.0) {
    r.statistic = m1 == m2 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m1 - m2);
    r.p_value = m1 == m2 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = (m1 - m2) / std::sqrt(se2);
  r.p_value = student_t_two_sided_p(r.statistic, r.dof);
  return r;
}

SignificanceResult compare_samples(std::span<const double> a, std::span<const double> b) {
  SignificanceResult s;
  s.levene = levene_test(a, b);
  s.t = t_test(a, b, s.levene.p_value > kLeveneAlpha);
  return s;
}

}  // namespace persona
