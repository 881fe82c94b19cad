#include "persona/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace persona {

namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_up(int y, double a, double c) { return (y == 1 && a < c) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double c) { return (y == 1 && a > 0.0) || (y == -1 && a < c); }

double violation(const std::vector<double>& grad, const std::vector<int>& y, const std::vector<double>& alpha,
                 double c) {
  double up = -kInf, low = kInf;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double v = -y[t] * grad[t];
    if (in_up(y[t], alpha[t], c)) up = std::max(up, v);
    if (in_low(y[t], alpha[t], c)) low = std::min(low, v);
  }
  if (up == -kInf || low == kInf) return 0.0;
  return std::max(0.0, up - low);
}

}  // namespace

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double scale_gamma(const std::vector<FeatureRow>& x) {
  if (x.empty() || x[0].empty()) return 1.0;
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& row : x) {
    for (double v : row) {
      sum += v;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  for (const auto& row : x) {
    for (double v : row) sq += (v - mean) * (v - mean);
  }
  const double var = sq / static_cast<double>(n);
  if (!(var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x[0].size()) * var);
}

double BinarySvm::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) {
    s += coefficients[i] * rbf_kernel(support_vectors[i], x, gamma);
  }
  return s;
}

BinarySolution solve_binary_svm(const std::vector<std::vector<double>>& k, const std::vector<int>& y, double c,
                                double tolerance, std::size_t max_iterations) {
  const std::size_t n = y.size();
  if (n == 0 || k.size() != n) throw std::invalid_argument("solve_binary_svm: size mismatch");
  if (!(c > 0.0)) throw std::invalid_argument("solve_binary_svm: C must be positive");
  BinarySolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = sol.alpha;
  auto q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * k[i][j]; };

  while (sol.iterations < max_iterations) {
    // First index: maximal violation among I_up.
    double gmax = -kInf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(y[t], alpha[t], c) && -y[t] * grad[t] >= gmax) {
        if (-y[t] * grad[t] > gmax || i == n) {
          gmax = -y[t] * grad[t];
          i = t;
        }
      }
    }
    // Second index: largest guaranteed objective decrease among I_low.
    double gmax2 = -kInf;
    double best = kInf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(y[t], alpha[t], c)) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      if (i == n) continue;
      const double b = gmax + yg;
      if (b > 0.0) {
        double a = k[i][i] + k[t][t] - 2.0 * k[i][t];
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < best) {
          best = obj;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < tolerance) {
      sol.converged = true;
      break;
    }
    ++sol.iterations;

    const double ai_old = alpha[i], aj_old = alpha[j];
    if (y[i] != y[j]) {
      double quad = k[i][i] + k[j][j] + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = k[i][i] + k[j][j] - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai_old, dj = alpha[j] - aj_old;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho;
  if (n_free > 0) rho = sum_free / static_cast<double>(n_free);
  else if (std::isfinite(ub) && std::isfinite(lb)) rho = (ub + lb) / 2.0;
  else rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  sol.bias = -rho;
  return sol;
}

int SvmModel::predict(std::span<const double> x) const {
  std::vector<int> votes(static_cast<std::size_t>(class_count_), 0);
  for (const auto& p : pairs_) {
    ++votes[static_cast<std::size_t>(p.svm.decision(x) > 0.0 ? p.positive : p.negative)];
  }
  // max_element returns the first maximum, i.e. the lowest class id.
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> SvmModel::predict(const std::vector<FeatureRow>& x) const {
  std::vector<int> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(predict(row));
  return out;
}

SvmModel svm_train(const std::vector<FeatureRow>& x, const std::vector<int>& y, double c, double gamma,
                   double tolerance) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("svm_train: size mismatch");
  const int classes = *std::max_element(y.begin(), y.end()) + 1;
  if (*std::min_element(y.begin(), y.end()) < 0) throw std::invalid_argument("svm_train: negative label");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < y.size(); ++i) members[static_cast<std::size_t>(y[i])].push_back(i);
  if (classes < 2) throw std::invalid_argument("svm_train: need at least two classes");
  for (int k = 0; k < classes; ++k) {
    if (members[static_cast<std::size_t>(k)].empty()) {
      throw std::invalid_argument("svm_train: class " + std::to_string(k) + " has no samples");
    }
  }

  SvmModel m;
  m.c_ = c;
  m.gamma_ = gamma > 0.0 ? gamma : scale_gamma(x);
  m.class_count_ = classes;

  // Kernel rows are computed once and shared by all pairwise problems.
  const std::size_t n = x.size();
  std::vector<std::vector<double>> full(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    full[i][i] = 1.0;
    for (std::size_t j = 0; j < i; ++j) full[i][j] = full[j][i] = rbf_kernel(x[i], x[j], m.gamma_);
  }

  for (int a = 0; a < classes; ++a) {
    for (int b = a + 1; b < classes; ++b) {
      SvmModel::PairModel p;
      p.positive = a;
      p.negative = b;
      std::vector<int> labels;
      for (auto i : members[static_cast<std::size_t>(a)]) {
        p.train_indices.push_back(i);
        labels.push_back(1);
      }
      for (auto i : members[static_cast<std::size_t>(b)]) {
        p.train_indices.push_back(i);
        labels.push_back(-1);
      }
      const std::size_t sub = p.train_indices.size();
      std::vector<std::vector<double>> kernel(sub, std::vector<double>(sub));
      for (std::size_t r = 0; r < sub; ++r) {
        for (std::size_t s = 0; s < sub; ++s) kernel[r][s] = full[p.train_indices[r]][p.train_indices[s]];
      }
      auto sol = solve_binary_svm(kernel, labels, c, tolerance);
      if (!sol.converged) throw std::runtime_error("svm_train: solver did not converge");
      p.alpha = sol.alpha;
      p.svm.gamma = m.gamma_;
      p.svm.bias = sol.bias;
      for (std::size_t r = 0; r < sub; ++r) {
        if (sol.alpha[r] > 0.0) {
          p.svm.support_vectors.push_back(x[p.train_indices[r]]);
          p.svm.coefficients.push_back(sol.alpha[r] * labels[r]);
        }
      }
      p.labels = std::move(labels);
      m.pairs_.push_back(std::move(p));
    }
  }
  return m;
}

double max_kkt_violation(const SvmModel::PairModel& pair, const std::vector<FeatureRow>& x, double c) {
  const std::size_t n = pair.train_indices.size();
  std::vector<double> grad(n, -1.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      if (pair.alpha[s] == 0.0) continue;
      grad[r] += pair.labels[r] * pair.labels[s] *
                 rbf_kernel(x[pair.train_indices[r]], x[pair.train_indices[s]], pair.svm.gamma) * pair.alpha[s];
    }
  }
  return violation(grad, pair.labels, pair.alpha, c);
}

}  // namespace persona
