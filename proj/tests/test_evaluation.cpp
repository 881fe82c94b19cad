#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "persona/evaluation.hpp"
#include "persona/synthetic.hpp"

using namespace persona;

namespace {

class ConstantRecogniser final : public OceanRecogniser {
 public:
  OceanScores score(const UtteranceRefs&) const override { return OceanScores{}; }
};

// Reads the label off feature 0.
class PeekClassifier final : public Classifier {
 public:
  void fit(const std::vector<FeatureRow>&, const std::vector<int>&) override {}
  int predict(std::span<const double> x) const override { return static_cast<int>(x[0]); }
};

class ZeroClassifier final : public Classifier {
 public:
  void fit(const std::vector<FeatureRow>&, const std::vector<int>&) override {}
  int predict(std::span<const double>) const override { return 0; }
};

std::vector<ClassCorpus> word_classes(std::size_t k, std::size_t n) {
  std::vector<ClassCorpus> out;
  for (std::size_t c = 0; c < k; ++c) {
    ClassCorpus cc{"class" + std::to_string(c), {}};
    for (std::size_t i = 0; i < n; ++i) cc.utterances.push_back({"w" + std::to_string(c), "shared"});
    out.push_back(std::move(cc));
  }
  return out;
}

LabeledSamples labelled_by_feature(std::size_t k, std::size_t per_class) {
  LabeledSamples s;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) s.push_back({{static_cast<double>(c), static_cast<double>(i)}, static_cast<int>(c)});
  }
  return s;
}

}  // namespace

TEST_CASE("sample counts and balance") {
  ConstantRecogniser rec;
  auto big = make_eval_samples(word_classes(13, 20), rec, 250, 5, 1);
  CHECK(big.size() == 3250);
  auto small = make_eval_samples(word_classes(2, 10), rec, 3, 4, 1);
  CHECK(small.size() == 6);
  std::map<int, int> per;
  for (const auto& s : small) {
    per[s.label]++;
    CHECK(s.features == FeatureRow(5, 4.0));
  }
  CHECK(per == std::map<int, int>{{0, 3}, {1, 3}});

  auto classes = word_classes(3, 10);
  classes[1].utterances.resize(3);
  try {
    make_eval_samples(classes, rec, 2, 4, 1);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("class1") != std::string::npos);
  }
}

TEST_CASE("bundles are distinct indices and reproducible") {
  auto a = sample_bundle(100, 30, 5, 2, 7);
  CHECK(a == sample_bundle(100, 30, 5, 2, 7));
  CHECK(a != sample_bundle(100, 30, 5, 2, 8));
  std::set<std::size_t> u(a.begin(), a.end());
  CHECK(u.size() == 30);
  CHECK(*u.rbegin() < 100);
}

TEST_CASE("bag of words features") {
  std::vector<ClassCorpus> c = {{"a", {{"the", "the", "cat"}, {"the", "dog"}}}, {"b", {{"the", "bird"}, {"a", "the"}}}};
  CHECK(top_words(c, 1) == std::vector<std::string>{"the"});
  CHECK(top_words(c, 1, true) == std::vector<std::string>{"bird"});
  CHECK(is_stop_word("the"));
  CHECK_FALSE(is_stop_word("bird"));
  auto s = bow_features(c, 3, 4, 2, 9);
  CHECK(s.size() == 8);
  for (const auto& x : s) {
    CHECK(x.features.size() == 3);
    double total = 0.0;
    for (double v : x.features) total += v;
    CHECK(total <= 1.0 + 1e-12);
  }
  // Class a, both utterances: "the" is 3 of 5 tokens.
  auto one = bow_features({c[0], c[1]}, 1, 1, 2, 9);
  CHECK(one[0].features[0] == doctest::Approx(3.0 / 5.0));
}

TEST_CASE("metrics from pooled predictions") {
  auto m = class_metrics({0, 0, 1, 1}, {0, 0, 0, 0}, 2);
  CHECK(m[0].recall == 1.0);
  CHECK(m[0].precision == 0.5);
  CHECK(m[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m[1].precision == 0.0);
  CHECK(m[1].recall == 0.0);
  CHECK(m[1].f1 == 0.0);
}

TEST_CASE("cross validation with stub classifiers") {
  auto samples = labelled_by_feature(3, 20);
  auto perfect = cross_validate(samples, [] { return std::make_unique<PeekClassifier>(); }, 5, 4, 1);
  CHECK(perfect.mean.f1 == 1.0);
  CHECK(perfect.stddev.f1 == 0.0);
  CHECK(perfect.per_iteration.size() == 4);
  CHECK(perfect.iteration_f1 == std::vector<double>(4, 1.0));

  auto two = labelled_by_feature(2, 10);
  auto zero = cross_validate(two, [] { return std::make_unique<ZeroClassifier>(); }, 5, 2, 1);
  CHECK(zero.per_class[0].recall == 1.0);
  CHECK(zero.per_class[0].precision == 0.5);
  CHECK(zero.per_class[1].precision == 0.0);
  CHECK(zero.mean.f1 == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(cross_validate(labelled_by_feature(2, 3), [] { return std::make_unique<ZeroClassifier>(); }, 5, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("folds are stratified") {
  // A classifier that records the class mix of its training set.
  static std::vector<std::map<int, int>> seen;
  seen.clear();
  struct Recorder final : Classifier {
    void fit(const std::vector<FeatureRow>&, const std::vector<int>& y) override {
      std::map<int, int> mix;
      for (int v : y) mix[v]++;
      seen.push_back(mix);
    }
    int predict(std::span<const double>) const override { return 0; }
  };
  cross_validate(labelled_by_feature(3, 10), [] { return std::make_unique<Recorder>(); }, 5, 2, 3);
  REQUIRE(seen.size() == 10);
  for (const auto& mix : seen) CHECK(mix == std::map<int, int>{{0, 8}, {1, 8}, {2, 8}});
}

TEST_CASE("separable features are classified and shuffled ones are at chance") {
  auto samples = synthetic_feature_samples(4, 40, 5, 0.2, 11);
  auto good = cross_validate(samples, svm_classifier(1.0), 5, 2, 1);
  CHECK(good.mean.f1 > 0.99);

  auto shuffled = shuffle_labels(samples, 4);
  auto bad = cross_validate(shuffled, svm_classifier(1.0), 5, 3, 1);
  CHECK(std::fabs(bad.mean.f1 - 0.25) < 3.0 * std::max(bad.stddev.f1, 0.03));

  std::map<int, int> before, after;
  for (const auto& s : samples) before[s.label]++;
  for (const auto& s : shuffled) after[s.label]++;
  CHECK(before == after);
}

TEST_CASE("results do not depend on input order") {
  auto samples = synthetic_feature_samples(3, 20, 5, 1.5, 2);
  auto a = cross_validate(samples, svm_classifier(10.0), 5, 2, 7);
  Rng rng(1);
  auto perm = samples;
  rng.shuffle(perm);
  auto b = cross_validate(perm, svm_classifier(10.0), 5, 2, 7);
  CHECK(a.iteration_f1 == b.iteration_f1);
  CHECK(shuffle_labels(samples, 3)[5].label == shuffle_labels(perm, 3)[5].label);
}

TEST_CASE("C tuning") {
  auto samples = synthetic_feature_samples(3, 20, 5, 1.0, 3);
  CHECK(tune_c(samples, {7.0}, 5, 1) == 7.0);
  // First grid value, smallest first, reaching the best one-pass F1.
  double best = -1.0, expected = 0.0;
  for (double c : {0.1, 1.0, 100.0}) {
    const double f1 = cross_validate(samples, svm_classifier(c), 5, 1, 1).mean.f1;
    if (f1 > best) {
      best = f1;
      expected = c;
    }
  }
  CHECK(tune_c(samples, {100.0, 0.1, 1.0}, 5, 1) == expected);
  CHECK_THROWS_AS(tune_c(samples, {}, 5, 1), std::invalid_argument);

  EvaluationParams p;
  p.iterations = 3;
  p.c_grid = {1.0};
  auto r = evaluate_samples(samples, p, 5);
  CHECK(r.c == 1.0);
  CHECK(r.iteration_f1.size() == 3);
  auto s = compare_conditions(r, r);
  CHECK(s.t.p_value == 1.0);
}
