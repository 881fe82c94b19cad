#pragma once

// Tail probabilities by direct numerical integration of the densities.
// Independent of the continued-fraction code they check.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

namespace persona::testing {

inline double t_density(double x, double dof) {
  const double log_c = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) - 0.5 * std::log(dof * M_PI);
  return std::exp(log_c - (dof + 1.0) / 2.0 * std::log1p(x * x / dof));
}

inline double t_two_sided_by_quadrature(double t, double dof) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double tail = integrator.integrate([dof](double x) { return t_density(x, dof); }, std::fabs(t),
                                           std::numeric_limits<double>::infinity());
  return 2.0 * tail;
}

inline double f_density(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  const double log_b = std::lgamma(d1 / 2.0) + std::lgamma(d2 / 2.0) - std::lgamma((d1 + d2) / 2.0);
  return std::exp(0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(x) -
                  0.5 * (d1 + d2) * std::log1p(d1 * x / d2) - log_b);
}

inline double f_sf_by_quadrature(double f, double d1, double d2) {
  auto density = [d1, d2](double x) { return f_density(x, d1, d2); };
  if (f < 1.0) {
    // d1 = 1 has an integrable singularity at 0, which tanh-sinh handles.
    boost::math::quadrature::tanh_sinh<double> integrator;
    return 1.0 - integrator.integrate(density, 0.0, f);
  }
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(density, f, std::numeric_limits<double>::infinity());
}

}  // namespace persona::testing
