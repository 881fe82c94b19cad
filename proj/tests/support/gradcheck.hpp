#pragma once

// Central finite-difference checks against the tape's gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "persona/autodiff.hpp"
#include "persona/tensor.hpp"

namespace persona::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst;   // "<tensor>[i]" of the largest relative error
};

// |a - n| / max(|a|, |n|, floor). Below the floor the comparison is
// effectively absolute, which keeps near-zero gradients from dominating.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), floor});
}

/// `loss` must build a scalar on the tape it is given and be a pure
/// function of the tensors' values.
inline GradCheck check_gradients(const std::vector<std::pair<std::string, Tensor*>>& tensors,
                                 const std::function<Var(Tape&)>& loss, double h = 1e-5) {
  for (auto& [_, t] : tensors) t->zero_grad();
  Tape tape;
  tape.backward(loss(tape));
  std::vector<std::vector<double>> analytic;
  for (auto& [_, t] : tensors) analytic.push_back(t->grad);

  auto eval = [&] {
    Tape t;
    return t.scalar(loss(t));
  };
  GradCheck out;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    auto& [name, t] = tensors[k];
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double keep = t->value[i];
      t->value[i] = keep + h;
      const double up = eval();
      t->value[i] = keep - h;
      const double down = eval();
      t->value[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = relative_error(analytic[k][i], numeric);
      out.max_abs_error = std::max(out.max_abs_error, std::fabs(analytic[k][i] - numeric));
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = name + "[" + std::to_string(i) + "]";
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace persona::testing
