#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace persona {

// I_x(a, b) by Lentz's continued fraction, absolute tolerance 1e-10 or
// better.
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with `dof` degrees of freedom (dof may be
// fractional).
double student_t_cdf(double t, double dof);
// Two-sided P(|T| >= |t|).
double student_t_two_sided_p(double t, double dof);
// Upper tail P(F >= f) of the F distribution.
double f_distribution_sf(double f, double d1, double d2);

double mean(std::span<const double> v);
// Unbiased (n - 1) variance.
double sample_variance(std::span<const double> v);
double sample_stddev(std::span<const double> v);

struct LeveneResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 0.0;
  double df2 = 0.0;
};

/// Levene's test for equal variances, centred on the group means.
LeveneResult levene_test(std::span<const double> group_a, std::span<const double> group_b);

enum class TTestVariant { kStudent, kWelch };
std::string_view to_string(TTestVariant v);

struct TTestResult {
  TTestVariant variant = TTestVariant::kStudent;
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Student's pooled-variance test when equal_variance, otherwise Welch's
// test with Welch-Satterthwaite degrees of freedom. Two-sided.
TTestResult t_test(std::span<const double> group_a, std::span<const double> group_b, bool equal_variance);

struct SignificanceResult {
  LeveneResult levene;
  TTestResult t;
};

inline constexpr double kLeveneAlpha = 0.05;

// Levene first; Student's test when its p exceeds 0.05, Welch's otherwise.
SignificanceResult compare_samples(std::span<const double> a, std::span<const double> b);

}  // namespace persona
