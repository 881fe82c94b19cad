#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace persona {

using FeatureRow = std::vector<double>;

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// 1 / (feature_count * variance of all training entries); 1 when the
// variance is zero.
double scale_gamma(const std::vector<FeatureRow>& x);

/// Two-class soft-margin SVM with labels +1 / -1.
struct BinarySvm {
  std::vector<FeatureRow> support_vectors;
  std::vector<double> coefficients;   // alpha_i * y_i for each support vector
  double bias = 0.0;
  double gamma = 1.0;

  double decision(std::span<const double> x) const;
};

struct BinarySolution {
  std::vector<double> alpha;   // one per training point, in [0, C]
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Sequential minimal optimisation with second-order working-set selection
/// on a precomputed kernel matrix. Stops when the maximal KKT violation
/// falls below `tolerance`.
BinarySolution solve_binary_svm(const std::vector<std::vector<double>>& kernel, const std::vector<int>& labels,
                                double c, double tolerance = 1e-3, std::size_t max_iterations = 1000000);

/// One-vs-one multiclass RBF SVM. Class ids are dense from 0; prediction is
/// by pairwise vote, ties going to the lowest class id.
class SvmModel {
 public:
  struct PairModel {
    int positive = 0;
    int negative = 0;
    BinarySvm svm;
    std::vector<std::size_t> train_indices;   // into the training set
    std::vector<int> labels;                  // +1 / -1 per train index
    std::vector<double> alpha;                // per train index
  };

  int predict(std::span<const double> x) const;
  std::vector<int> predict(const std::vector<FeatureRow>& x) const;

  double c() const { return c_; }
  double gamma() const { return gamma_; }
  int class_count() const { return class_count_; }
  const std::vector<PairModel>& pairs() const { return pairs_; }

  friend SvmModel svm_train(const std::vector<FeatureRow>& x, const std::vector<int>& y, double c, double gamma,
                            double tolerance);

 private:
  double c_ = 1.0;
  double gamma_ = 1.0;
  int class_count_ = 0;
  std::vector<PairModel> pairs_;
};

// gamma <= 0 selects scale_gamma(x).
SvmModel svm_train(const std::vector<FeatureRow>& x, const std::vector<int>& y, double c, double gamma = 0.0,
                   double tolerance = 1e-3);

// Largest KKT violation of a pairwise sub-problem on its own training
// points, measured as in the solver's stopping rule.
double max_kkt_violation(const SvmModel::PairModel& pair, const std::vector<FeatureRow>& x, double c);

}  // namespace persona
