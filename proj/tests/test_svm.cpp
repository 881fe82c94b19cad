#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "persona/rng.hpp"
#include "persona/svm.hpp"

using namespace persona;

namespace {

std::vector<std::vector<double>> gram(const std::vector<FeatureRow>& x, double gamma) {
  std::vector<std::vector<double>> k(x.size(), std::vector<double>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      double d = 0.0;
      for (std::size_t f = 0; f < x[i].size(); ++f) d += (x[i][f] - x[j][f]) * (x[i][f] - x[j][f]);
      k[i][j] = std::exp(-gamma * d);
    }
  }
  return k;
}

// Two concentric noisy rings, class 0 inside.
void rings(std::size_t n, Rng& rng, std::vector<FeatureRow>& x, std::vector<int>& y) {
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double r = (label == 0 ? 1.0 : 3.0) + 0.3 * rng.normal();
    const double t = rng.uniform(0.0, 2.0 * M_PI);
    x.push_back({r * std::cos(t), r * std::sin(t)});
    y.push_back(label);
  }
}

}  // namespace

TEST_CASE("rbf kernel and gamma heuristic") {
  std::vector<double> a = {0.0, 0.0}, b = {1.0, 1.0};
  CHECK(rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)));
  CHECK(rbf_kernel(a, a, 3.0) == 1.0);
  // Four entries 0,0,1,1: variance 0.25, two features.
  CHECK(scale_gamma({a, b}) == doctest::Approx(2.0));
  CHECK(scale_gamma({a, a}) == 1.0);
}

TEST_CASE("two separable points: closed form dual") {
  // Symmetric problem: equal multipliers, zero bias, margin 1.
  std::vector<FeatureRow> x = {{0.0}, {1.0}};
  auto sol = solve_binary_svm(gram(x, 1.0), {-1, 1}, 100.0, 1e-8);
  const double a = 1.0 / (1.0 - std::exp(-1.0));
  CHECK(sol.converged);
  CHECK(sol.alpha[0] == doctest::Approx(a).epsilon(1e-6));
  CHECK(sol.alpha[1] == doctest::Approx(a).epsilon(1e-6));
  CHECK(std::fabs(sol.bias) < 1e-6);

  auto m = svm_train(x, {0, 1}, 100.0, 1.0);
  CHECK(m.predict(std::vector<double>{-0.2}) == 0);
  CHECK(m.predict(std::vector<double>{1.3}) == 1);
}

TEST_CASE("xor with gamma 1 and C 10") {
  std::vector<FeatureRow> x = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  std::vector<int> y = {0, 1, 1, 0};
  auto m = svm_train(x, y, 10.0, 1.0, 1e-6);
  CHECK(m.predict(x) == y);
  // By symmetry every point is a margin support vector with
  // alpha = 1 / (1 - e^-1)^2, below C.
  const double a = 1.0 / std::pow(1.0 - std::exp(-1.0), 2.0);
  REQUIRE(m.pairs().size() == 1);
  for (double al : m.pairs()[0].alpha) CHECK(al == doctest::Approx(a).epsilon(1e-4));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = m.pairs()[0].svm.decision(x[i]);
    CHECK(std::fabs(f) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("rings are learned") {
  Rng rng(4);
  std::vector<FeatureRow> x, tx;
  std::vector<int> y, ty;
  rings(200, rng, x, y);
  rings(200, rng, tx, ty);
  auto m = svm_train(x, y, 10.0);
  auto p = m.predict(tx);
  std::size_t right = 0;
  for (std::size_t i = 0; i < p.size(); ++i) right += p[i] == ty[i];
  CHECK(static_cast<double>(right) / static_cast<double>(p.size()) >= 0.95);
}

TEST_CASE("multipliers respect box and equality constraints at convergence") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FeatureRow> x;
    std::vector<int> y;
    const int classes = 2 + static_cast<int>(rng.below(3));
    for (int i = 0; i < 60; ++i) {
      const int label = i % classes;
      x.push_back({rng.normal() + label, rng.normal(), rng.normal() * 0.5});
      y.push_back(label);
    }
    const double c = std::pow(10.0, static_cast<double>(rng.below(4)) - 1.0);
    auto m = svm_train(x, y, c);
    CHECK(m.pairs().size() == static_cast<std::size_t>(classes * (classes - 1) / 2));
    for (const auto& pair : m.pairs()) {
      double balance = 0.0;
      for (std::size_t r = 0; r < pair.alpha.size(); ++r) {
        CHECK(pair.alpha[r] >= 0.0);
        CHECK(pair.alpha[r] <= c);
        balance += pair.alpha[r] * pair.labels[r];
      }
      CHECK(std::fabs(balance) < 1e-9 * c * static_cast<double>(pair.alpha.size()) + 1e-12);
      CHECK(max_kkt_violation(pair, x, c) < 1e-3);
    }
  }
}

TEST_CASE("duplicating a non-support point changes nothing") {
  Rng rng(9);
  std::vector<FeatureRow> x;
  std::vector<int> y;
  rings(80, rng, x, y);
  auto m = svm_train(x, y, 1.0, 0.5, 1e-8);
  const auto& pair = m.pairs()[0];
  std::size_t idle = pair.alpha.size();
  for (std::size_t r = 0; r < pair.alpha.size(); ++r) {
    if (pair.alpha[r] == 0.0) {
      idle = pair.train_indices[r];
      break;
    }
  }
  REQUIRE(idle < x.size());
  auto x2 = x;
  auto y2 = y;
  x2.push_back(x[idle]);
  y2.push_back(y[idle]);
  auto m2 = svm_train(x2, y2, 1.0, 0.5, 1e-8);
  Rng probe(10);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p = {probe.uniform(-4, 4), probe.uniform(-4, 4)};
    const double a = m.pairs()[0].svm.decision(p), b = m2.pairs()[0].svm.decision(p);
    // Both solutions are within the solver tolerance of the same optimum.
    CHECK(std::fabs(a - b) < 1e-5);
  }
}

TEST_CASE("training input errors") {
  std::vector<FeatureRow> x = {{0.0}, {1.0}};
  CHECK_THROWS_AS(svm_train(x, {0, 0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(svm_train(x, {0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(svm_train(x, {0, 2}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_binary_svm(gram(x, 1.0), {1, -1}, 0.0), std::invalid_argument);
}
