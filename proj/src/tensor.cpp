#include "persona/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace persona {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), value(shape_size(shape), 0.0), grad(value.size(), 0.0) {}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : value) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor init_uniform(const std::vector<std::size_t>& shape, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("init_uniform: lo must be below hi");
  Tensor t(shape);
  for (double& v : t.value) v = rng.uniform(lo, hi);
  return t;
}

Tensor& ParameterSet::add(const std::string& name, Tensor t) {
  auto [it, inserted] = tensors_.insert_or_assign(name, std::move(t));
  (void)inserted;
  return it->second;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw std::out_of_range("no parameter named " + name);
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& [_, t] : tensors_) {
    for (double g : t.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

double clip_gradients(ParameterSet& params, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("clip_gradients: threshold must be positive");
  const double norm = params.grad_norm();
  if (norm <= threshold) return 1.0;
  const double scale = threshold / norm;
  for (auto& [_, t] : params.tensors()) {
    for (double& g : t.grad) g *= scale;
  }
  return scale;
}

void sgd_step(ParameterSet& params, double learning_rate) {
  for (auto& [_, t] : params.tensors()) {
    for (std::size_t i = 0; i < t.value.size(); ++i) t.value[i] -= learning_rate * t.grad[i];
  }
}

}  // namespace persona
