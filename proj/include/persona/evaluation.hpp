#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "persona/corpus.hpp"
#include "persona/recogniser.hpp"
#include "persona/stats.hpp"
#include "persona/svm.hpp"

namespace persona {

/// One feature vector (OCEAN scores, or word frequencies in bag-of-words
/// mode) computed from a bundle of utterances, tagged with its class.
struct LabeledSample {
  FeatureRow features;
  int label = 0;
};

using LabeledSamples = std::vector<LabeledSample>;

// The utterances of one class (a character, a persona, a personality type).
struct ClassCorpus {
  std::string name;
  std::vector<Words> utterances;
};

// Indices of bundle `sample` for class `class_index`; shared by the OCEAN
// and bag-of-words paths so both see the same bundles.
std::vector<std::size_t> sample_bundle(std::size_t class_size, std::size_t sample_size, std::uint64_t seed,
                                       std::size_t class_index, std::size_t sample);

/// n_samples bundles of sample_size utterances per class, each scored by the
/// recogniser. Bundles are drawn without replacement within a bundle.
LabeledSamples make_eval_samples(const std::vector<ClassCorpus>& classes, const OceanRecogniser& recogniser,
                                 std::size_t n_samples, std::size_t sample_size, std::uint64_t seed);

// The top_n most frequent words over all classes (ties lexicographic).
std::vector<std::string> top_words(const std::vector<ClassCorpus>& classes, std::size_t top_n,
                                   bool remove_stop_words = false);
bool is_stop_word(const std::string& word);

/// Bag-of-words counterpart of make_eval_samples: feature w is
/// count(w) / total tokens in the bundle, over the global top_n words.
LabeledSamples bow_features(const std::vector<ClassCorpus>& classes, std::size_t top_n, std::size_t n_samples,
                            std::size_t sample_size, std::uint64_t seed, bool remove_stop_words = false);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const std::vector<FeatureRow>& x, const std::vector<int>& y) = 0;
  virtual int predict(std::span<const double> x) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

// RBF SVM with the given C and gamma = scale_gamma(training features).
ClassifierFactory svm_classifier(double c);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class metrics from paired label vectors; precision of a class never
// predicted is 0.
std::vector<ClassMetrics> class_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                                        int class_count);

/// Repeated stratified k-fold results. Predictions of all folds are pooled
/// per iteration; means and standard deviations run over every per-class,
/// per-iteration value.
struct ClassificationReport {
  int class_count = 0;
  std::size_t folds = 0;
  std::size_t iterations = 0;
  double c = 0.0;
  std::vector<std::vector<ClassMetrics>> per_iteration;   // [iteration][class]
  std::vector<ClassMetrics> per_class;                    // mean over iterations
  std::vector<double> iteration_f1;                       // macro F1 per iteration
  ClassMetrics mean;
  ClassMetrics stddev;

  void summarize();
};

ClassificationReport cross_validate(const LabeledSamples& samples, const ClassifierFactory& factory,
                                    std::size_t folds, std::size_t iterations, std::uint64_t seed);

// Grid value with the best single-iteration cross-validated macro F1; ties
// go to the smallest C.
double tune_c(const LabeledSamples& samples, const std::vector<double>& grid, std::size_t folds, std::uint64_t seed);

// Labels permuted once uniformly at random.
LabeledSamples shuffle_labels(const LabeledSamples& samples, std::uint64_t seed);

struct EvaluationParams {
  std::size_t n_samples = 250;
  std::size_t sample_size = 500;
  std::size_t folds = 5;
  std::size_t iterations = 10;
  std::vector<double> c_grid{0.1, 1.0, 10.0, 100.0};
  std::size_t bow_top_n = 200;
  bool bow_remove_stop_words = false;
};

// tune_c followed by cross_validate with an SVM.
ClassificationReport evaluate_samples(const LabeledSamples& samples, const EvaluationParams& params,
                                      std::uint64_t seed);

// evaluate_samples on label-shuffled samples.
ClassificationReport shuffle_baseline(const LabeledSamples& samples, const EvaluationParams& params,
                                      std::uint64_t seed);

// Levene then Student/Welch on the two per-iteration macro F1 lists.
SignificanceResult compare_conditions(const ClassificationReport& a, const ClassificationReport& b);

}  // namespace persona
