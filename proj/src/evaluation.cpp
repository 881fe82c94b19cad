#include "persona/evaluation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "persona/rng.hpp"
#include "persona/text_util.hpp"

namespace persona {

namespace {

// scikit-learn's English stop-word list.
constexpr std::string_view kStopWords =
    "a about above across after afterwards again against all almost alone along already also although always am "
    "among amongst amoungst amount an and another any anyhow anyone anything anyway anywhere are around as at back "
    "be became because become becomes becoming been before beforehand behind being below beside besides between "
    "beyond bill both bottom but by call can cannot cant co con could couldnt cry de describe detail do done down "
    "due during each eg eight either eleven else elsewhere empty enough etc even ever every everyone everything "
    "everywhere except few fifteen fifty fill find fire first five for former formerly forty found four from front "
    "full further get give go had has hasnt have he hence her here hereafter hereby herein hereupon hers herself him "
    "himself his how however hundred i ie if in inc indeed interest into is it its itself keep last latter latterly "
    "least less ltd made many may me meanwhile might mill mine more moreover most mostly move much must my myself "
    "name namely neither never nevertheless next nine no nobody none noone nor not nothing now nowhere of off often "
    "on once one only onto or other others otherwise our ours ourselves out over own part per perhaps please put "
    "rather re same see seem seemed seeming seems serious several she should show side since sincere six sixty so "
    "some somehow someone something sometime sometimes somewhere still such system take ten than that the their "
    "them themselves then thence there thereafter thereby therefore therein thereupon these they thick thin third "
    "this those though three through throughout thru thus to together too top toward towards twelve twenty two un "
    "under until up upon us very via was we well were what whatever when whence whenever where whereafter whereas "
    "whereby wherein whereupon wherever whether which while whither who whoever whole whom whose why will with "
    "within without would yet you your yours yourself yourselves";

const std::set<std::string>& stop_words() {
  static const std::set<std::string> words = [] {
    std::set<std::string> s;
    for (auto w : split(kStopWords, ' ')) s.emplace(w);
    return s;
  }();
  return words;
}

void check_class_sizes(const std::vector<ClassCorpus>& classes, std::size_t sample_size) {
  if (classes.empty()) throw std::invalid_argument("no classes to sample");
  for (const auto& c : classes) {
    if (c.utterances.size() < sample_size) {
      throw std::invalid_argument("class '" + c.name + "' has " + std::to_string(c.utterances.size()) +
                                  " utterances, fewer than the sample size " + std::to_string(sample_size));
    }
  }
}

// Sorted by (label, features) so downstream seeded shuffles do not depend
// on the caller's ordering.
LabeledSamples canonical_order(LabeledSamples s) {
  std::stable_sort(s.begin(), s.end(), [](const LabeledSample& a, const LabeledSample& b) {
    if (a.label != b.label) return a.label < b.label;
    return a.features < b.features;
  });
  return s;
}

int count_classes(const LabeledSamples& samples) {
  int k = 0;
  for (const auto& s : samples) {
    if (s.label < 0) throw std::invalid_argument("negative class label");
    k = std::max(k, s.label + 1);
  }
  return k;
}

class SvmClassifier final : public Classifier {
 public:
  explicit SvmClassifier(double c) : c_(c) {}
  void fit(const std::vector<FeatureRow>& x, const std::vector<int>& y) override { model_ = svm_train(x, y, c_); }
  int predict(std::span<const double> x) const override { return model_.predict(x); }

 private:
  double c_;
  SvmModel model_;
};

double sample_sd_or_zero(const std::vector<double>& v) { return v.size() < 2 ? 0.0 : sample_stddev(v); }

}  // namespace

std::vector<std::size_t> sample_bundle(std::size_t class_size, std::size_t sample_size, std::uint64_t seed,
                                       std::size_t class_index, std::size_t sample) {
  Rng rng(derive_seed(seed, class_index, sample));
  return rng.sample_without_replacement(class_size, sample_size);
}

LabeledSamples make_eval_samples(const std::vector<ClassCorpus>& classes, const OceanRecogniser& recogniser,
                                 std::size_t n_samples, std::size_t sample_size, std::uint64_t seed) {
  check_class_sizes(classes, sample_size);
  LabeledSamples out;
  out.reserve(classes.size() * n_samples);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& utts = classes[k].utterances;
    for (std::size_t s = 0; s < n_samples; ++s) {
      UtteranceRefs bundle;
      for (auto i : sample_bundle(utts.size(), sample_size, seed, k, s)) bundle.push_back(&utts[i]);
      auto o = recogniser.score(bundle);
      out.push_back(LabeledSample{FeatureRow(o.values.begin(), o.values.end()), static_cast<int>(k)});
    }
  }
  return out;
}

bool is_stop_word(const std::string& word) { return stop_words().count(word) != 0; }

std::vector<std::string> top_words(const std::vector<ClassCorpus>& classes, std::size_t top_n,
                                   bool remove_stop_words) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : classes) {
    for (const auto& u : c.utterances) {
      for (const auto& w : u) {
        if (!remove_stop_words || !is_stop_word(w)) ++counts[w];
      }
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(top_n, ranked.size()); ++i) out.push_back(ranked[i].first);
  return out;
}

LabeledSamples bow_features(const std::vector<ClassCorpus>& classes, std::size_t top_n, std::size_t n_samples,
                            std::size_t sample_size, std::uint64_t seed, bool remove_stop_words) {
  check_class_sizes(classes, sample_size);
  auto vocab = top_words(classes, top_n, remove_stop_words);
  if (vocab.empty()) throw std::invalid_argument("bow_features: corpus has no words");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = i;
  LabeledSamples out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto& utts = classes[k].utterances;
    for (std::size_t s = 0; s < n_samples; ++s) {
      FeatureRow f(vocab.size(), 0.0);
      std::size_t total = 0;
      for (auto i : sample_bundle(utts.size(), sample_size, seed, k, s)) {
        for (const auto& w : utts[i]) {
          ++total;
          auto it = index.find(w);
          if (it != index.end()) f[it->second] += 1.0;
        }
      }
      if (total > 0) {
        for (double& v : f) v /= static_cast<double>(total);
      }
      out.push_back(LabeledSample{std::move(f), static_cast<int>(k)});
    }
  }
  return out;
}

ClassifierFactory svm_classifier(double c) {
  return [c] { return std::make_unique<SvmClassifier>(c); };
}

std::vector<ClassMetrics> class_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                                        int class_count) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("class_metrics: length mismatch");
  const auto k = static_cast<std::size_t>(class_count);
  std::vector<std::size_t> tp(k, 0), pred(k, 0), actual(k, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++actual[static_cast<std::size_t>(truth[i])];
    ++pred[static_cast<std::size_t>(predicted[i])];
    if (truth[i] == predicted[i]) ++tp[static_cast<std::size_t>(truth[i])];
  }
  std::vector<ClassMetrics> out(k);
  for (std::size_t c = 0; c < k; ++c) {
    auto& m = out[c];
    m.precision = pred[c] ? static_cast<double>(tp[c]) / static_cast<double>(pred[c]) : 0.0;
    m.recall = actual[c] ? static_cast<double>(tp[c]) / static_cast<double>(actual[c]) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  }
  return out;
}

void ClassificationReport::summarize() {
  const auto k = static_cast<std::size_t>(class_count);
  per_class.assign(k, ClassMetrics{});
  iteration_f1.clear();
  std::vector<double> ps, rs, fs;
  for (const auto& it : per_iteration) {
    double macro = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      per_class[c].precision += it[c].precision;
      per_class[c].recall += it[c].recall;
      per_class[c].f1 += it[c].f1;
      ps.push_back(it[c].precision);
      rs.push_back(it[c].recall);
      fs.push_back(it[c].f1);
      macro += it[c].f1;
    }
    iteration_f1.push_back(macro / static_cast<double>(k));
  }
  const auto n = static_cast<double>(per_iteration.size());
  for (auto& m : per_class) {
    m.precision /= n;
    m.recall /= n;
    m.f1 /= n;
  }
  mean = ClassMetrics{persona::mean(ps), persona::mean(rs), persona::mean(fs)};
  stddev = ClassMetrics{sample_sd_or_zero(ps), sample_sd_or_zero(rs), sample_sd_or_zero(fs)};
}

ClassificationReport cross_validate(const LabeledSamples& input, const ClassifierFactory& factory,
                                    std::size_t folds, std::size_t iterations, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("cross_validate: need at least two folds");
  if (iterations < 1) throw std::invalid_argument("cross_validate: need at least one iteration");
  const LabeledSamples samples = canonical_order(input);
  const int k = count_classes(samples);
  if (k < 2) throw std::invalid_argument("cross_validate: need at least two classes");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < samples.size(); ++i) members[static_cast<std::size_t>(samples[i].label)].push_back(i);
  for (int c = 0; c < k; ++c) {
    if (members[static_cast<std::size_t>(c)].size() < folds) {
      throw std::invalid_argument("cross_validate: class " + std::to_string(c) + " has fewer samples than folds");
    }
  }

  ClassificationReport report;
  report.class_count = k;
  report.folds = folds;
  report.iterations = iterations;
  for (std::size_t it = 0; it < iterations; ++it) {
    Rng rng(derive_seed(seed, it));
    // Stratified assignment: each class is shuffled and dealt round-robin.
    std::vector<std::size_t> fold_of(samples.size());
    for (auto m : members) {
      rng.shuffle(m);
      for (std::size_t r = 0; r < m.size(); ++r) fold_of[m[r]] = r % folds;
    }
    std::vector<int> truth, predicted;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<FeatureRow> x;
      std::vector<int> y;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (fold_of[i] != f) {
          x.push_back(samples[i].features);
          y.push_back(samples[i].label);
        }
      }
      auto clf = factory();
      clf->fit(x, y);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (fold_of[i] == f) {
          truth.push_back(samples[i].label);
          predicted.push_back(clf->predict(samples[i].features));
        }
      }
    }
    report.per_iteration.push_back(class_metrics(truth, predicted, k));
  }
  report.summarize();
  return report;
}

double tune_c(const LabeledSamples& samples, const std::vector<double>& grid, std::size_t folds, std::uint64_t seed) {
  if (grid.empty()) throw std::invalid_argument("tune_c: empty grid");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() == 1) return sorted[0];
  double best_c = sorted[0];
  double best_f1 = -1.0;
  for (double c : sorted) {
    const double f1 = cross_validate(samples, svm_classifier(c), folds, 1, seed).mean.f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_c = c;
    }
  }
  return best_c;
}

LabeledSamples shuffle_labels(const LabeledSamples& samples, std::uint64_t seed) {
  LabeledSamples out = canonical_order(samples);
  std::vector<int> labels;
  for (const auto& s : out) labels.push_back(s.label);
  Rng rng(seed);
  rng.shuffle(labels);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].label = labels[i];
  return out;
}

ClassificationReport evaluate_samples(const LabeledSamples& samples, const EvaluationParams& params,
                                      std::uint64_t seed) {
  const double c = tune_c(samples, params.c_grid, params.folds, derive_seed(seed, "tune_c"));
  auto report = cross_validate(samples, svm_classifier(c), params.folds, params.iterations,
                               derive_seed(seed, "cross_validate"));
  report.c = c;
  return report;
}

ClassificationReport shuffle_baseline(const LabeledSamples& samples, const EvaluationParams& params,
                                      std::uint64_t seed) {
  return evaluate_samples(shuffle_labels(samples, derive_seed(seed, "shuffle")), params, seed);
}

SignificanceResult compare_conditions(const ClassificationReport& a, const ClassificationReport& b) {
  if (a.iteration_f1.size() != b.iteration_f1.size()) {
    throw std::invalid_argument("compare_conditions: reports ran different iteration counts");
  }
  return compare_samples(a.iteration_f1, b.iteration_f1);
}

}  // namespace persona
