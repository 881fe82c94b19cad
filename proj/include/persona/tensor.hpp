#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "persona/rng.hpp"

namespace persona {

/// Dense row-major array of doubles with a gradient buffer of the same shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);

  std::size_t size() const { return value.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return value[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return value[r * cols() + c]; }

  void zero_grad();
  bool all_finite() const;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

// Entries i.i.d. uniform in [lo, hi).
Tensor init_uniform(const std::vector<std::size_t>& shape, double lo, double hi, Rng& rng);

/// Named trainable tensors. std::map keeps addresses stable and iteration
/// (and therefore every reduction over parameters) in a fixed order.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  void zero_grad();
  double grad_norm() const;
  std::size_t parameter_count() const;

  std::map<std::string, Tensor>& tensors() { return tensors_; }
  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

 private:
  std::map<std::string, Tensor> tensors_;
};

// Global-norm clipping. Returns the factor applied to every gradient
// (1 when the norm is already within the threshold).
double clip_gradients(ParameterSet& params, double threshold);

// p <- p - lr * grad
void sgd_step(ParameterSet& params, double learning_rate);

/// Constant base rate, halved once after `halve_after` iterations
/// (iterations are 1-based).
class LearningRateSchedule {
 public:
  LearningRateSchedule(double base, std::size_t halve_after) : base_(base), halve_after_(halve_after) {}
  double rate(std::size_t iteration) const { return iteration > halve_after_ ? base_ * 0.5 : base_; }

 private:
  double base_;
  std::size_t halve_after_;
};

}  // namespace persona
