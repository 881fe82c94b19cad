#include <doctest.h>

#include <cmath>

#include "persona/autodiff.hpp"
#include "persona/layers.hpp"
#include "persona/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace persona;
using persona::testing::check_gradients;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  return init_uniform(shape, -scale, scale, rng);
}

// Reduces a vector to a scalar with fixed random weights so every output
// component gets a distinct upstream gradient.
Var weigh(Tape& t, Var v, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  return t.dot(v, t.constant(w));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("elementwise and structural ops") {
  Rng rng(1);
  Tensor a = random_tensor({5}, rng), b = random_tensor({5}, rng);
  auto params = std::vector<std::pair<std::string, Tensor*>>{{"a", &a}, {"b", &b}};

  auto check = [&](const char* what, auto build) {
    auto r = check_gradients(params, [&](Tape& t) { return build(t, t.vector_param(a), t.vector_param(b)); });
    INFO(what << " worst " << r.worst);
    CHECK(r.max_rel_error < kTol);
  };
  check("add", [](Tape& t, Var x, Var y) { return weigh(t, t.add(x, y), 5, 1); });
  check("mul", [](Tape& t, Var x, Var y) { return weigh(t, t.mul(x, y), 5, 2); });
  check("scale", [](Tape& t, Var x, Var) { return weigh(t, t.scale(x, -2.5), 5, 3); });
  check("sigmoid", [](Tape& t, Var x, Var) { return weigh(t, t.sigmoid(x), 5, 4); });
  check("tanh", [](Tape& t, Var x, Var) { return weigh(t, t.tanh(x), 5, 5); });
  check("concat", [](Tape& t, Var x, Var y) { return weigh(t, t.concat({x, y, x}), 15, 6); });
  check("slice", [](Tape& t, Var x, Var y) { return weigh(t, t.slice(t.concat({x, y}), 3, 4), 4, 7); });
  check("dot", [](Tape& t, Var x, Var y) { return t.dot(x, y); });
  check("softmax", [](Tape& t, Var x, Var) { return weigh(t, t.softmax(x), 5, 8); });
  check("mask", [](Tape& t, Var x, Var) { return weigh(t, t.mask(x, {1, 0, 2, 0, 1}), 5, 9); });
  check("nll", [](Tape& t, Var x, Var) { return t.nll(x, 3); });
  check("sum", [](Tape& t, Var x, Var y) { return t.sum({t.dot(x, y), t.dot(x, x)}); });
  check("weighted_sum", [](Tape& t, Var x, Var y) {
    auto w = t.softmax(t.slice(x, 0, 2));
    return weigh(t, t.weighted_sum(w, {x, y}), 5, 10);
  });
}

TEST_CASE("parameter ops") {
  Rng rng(2);
  Tensor w = random_tensor({4, 3}, rng), x = random_tensor({3}, rng), y = random_tensor({4}, rng);
  auto params = std::vector<std::pair<std::string, Tensor*>>{{"w", &w}, {"x", &x}, {"y", &y}};
  auto r = check_gradients(params, [&](Tape& t) {
    auto a = t.matvec(w, t.vector_param(x));
    auto b = t.matvec_transposed(w, t.vector_param(y));
    auto e = t.row(w, 2);
    return t.sum({weigh(t, a, 4, 1), weigh(t, b, 3, 2), weigh(t, e, 3, 3)});
  });
  CHECK(r.max_rel_error < kTol);
}

TEST_CASE("lstm cell, attention and output layer") {
  Rng rng(3);
  const std::size_t d = 3, in = 2;
  Tensor weight = random_tensor({4 * d, in + d}, rng, 0.5), bias = random_tensor({4 * d}, rng, 0.5);
  Tensor x = random_tensor({in}, rng), h0 = random_tensor({d}, rng), m0 = random_tensor({d}, rng);
  Tensor wa = random_tensor({d, d}, rng), wc = random_tensor({d, 2 * d}, rng), wo = random_tensor({6, d}, rng);
  auto params = std::vector<std::pair<std::string, Tensor*>>{
      {"weight", &weight}, {"bias", &bias}, {"x", &x}, {"h0", &h0}, {"m0", &m0},
      {"wa", &wa},         {"wc", &wc},     {"wo", &wo}};
  auto r = check_gradients(params, [&](Tape& t) {
    LstmLayerParams p{&weight, &bias};
    LstmLayerState s{t.vector_param(h0), t.vector_param(m0)};
    std::vector<Var> enc;
    for (int step = 0; step < 3; ++step) {
      s = lstm_cell_step(t, t.vector_param(x), s, p);
      enc.push_back(s.h);
    }
    auto att = attention_context(t, s.h, enc, wa);
    auto logits = output_distribution(t, att.context, s.h, wc, wo);
    std::vector<std::size_t> targets = {4};
    return t.add(cross_entropy_loss(t, {logits}, targets), weigh(t, s.m, d, 9));
  });
  INFO("worst " << r.worst);
  // Deeper composition, so central differences carry more truncation error.
  CHECK(r.max_rel_error < 10 * kTol);
}

TEST_CASE("softmax and log-softmax values") {
  std::vector<double> z = {1000.0, 1000.0, 999.0};
  auto p = softmax(z);
  CHECK(p[0] == doctest::Approx(p[1]));
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  auto lp = log_softmax_extended(z);
  CHECK(static_cast<double>(std::exp(lp[2]) / std::exp(lp[0])) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("gradient clipping, sgd and schedule") {
  ParameterSet ps;
  auto& t = ps.add("w", Tensor({2}));
  t.grad = {3.0, 4.0};
  CHECK(ps.grad_norm() == doctest::Approx(5.0));
  CHECK(clip_gradients(ps, 10.0) == 1.0);
  CHECK(clip_gradients(ps, 1.0) == doctest::Approx(0.2));
  CHECK(ps.grad_norm() == doctest::Approx(1.0));
  t.value = {1.0, 1.0};
  sgd_step(ps, 0.5);
  CHECK(t.value[0] == doctest::Approx(1.0 - 0.5 * 0.6));
  LearningRateSchedule s(1.0, 6);
  CHECK(s.rate(1) == 1.0);
  CHECK(s.rate(6) == 1.0);
  CHECK(s.rate(7) == 0.5);
  CHECK(s.rate(30) == 0.5);
}

TEST_CASE("dropout is identity at inference and unbiased in training") {
  Rng rng(4);
  Tape t;
  auto x = t.constant(std::vector<double>(2000, 1.0));
  auto same = t.value(dropout(t, x, 0.2, rng, false));
  CHECK(same == t.value(x));
  auto y = t.value(dropout(t, x, 0.2, rng, true));
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
}
