#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "persona/corpus.hpp"
#include "persona/ocean.hpp"

namespace persona {

/// A word category matched by literal words or by prefix patterns
/// (written `stem*` in lexicon files).
struct LexiconCategory {
  std::string name;
  std::set<std::string> words;
  std::vector<std::string> prefixes;

  bool matches(const std::string& token) const;
};

class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<LexiconCategory> categories);

  // Sections `[name]` followed by one entry per line; `#` starts a comment.
  static Lexicon load(std::istream& in, const std::string& source = "<lexicon>");
  static Lexicon load_file(const std::string& path);

  const std::vector<LexiconCategory>& categories() const { return categories_; }
  const LexiconCategory* find(const std::string& name) const;

 private:
  std::vector<LexiconCategory> categories_;
};

/// Per-word psycholinguistic ratings, grouped by named dimension.
class NormTable {
 public:
  void set(const std::string& dimension, const std::string& word, double value);
  const double* lookup(const std::string& dimension, const std::string& word) const;
  std::vector<std::string> dimensions() const;

  // `word<TAB>norm-name<TAB>value`
  static NormTable load(std::istream& in, const std::string& source = "<norms>");
  static NormTable load_file(const std::string& path);

 private:
  std::map<std::string, std::unordered_map<std::string, double>> table_;
};

// Ordered by name so iteration is deterministic.
using FeatureVector = std::map<std::string, double>;
using UtteranceRefs = std::vector<const Words*>;

inline constexpr const char* kMeanLengthFeature = "mean_utterance_length";
inline constexpr const char* kTypeTokenFeature = "type_token_ratio";
std::string category_feature(const std::string& category);
std::string norm_feature(const std::string& dimension);

/// One relative frequency per category, one covered-token mean per norm
/// dimension, mean utterance length and type-token ratio.
FeatureVector extract_features(const UtteranceRefs& utterances, const Lexicon& lexicon, const NormTable& norms);
FeatureVector extract_features(const std::vector<Words>& utterances, const Lexicon& lexicon,
                               const NormTable& norms);

struct TraitModel {
  double intercept = 4.0;
  std::map<std::string, double> weights;
};

using TraitModels = std::array<TraitModel, kTraitCount>;

// `trait<TAB>feature-name<TAB>weight`; `__intercept__` sets the intercept.
TraitModels load_trait_models(std::istream& in, const std::string& source = "<traits>");
TraitModels load_trait_models_file(const std::string& path);

// intercept + sum(weight * feature) per trait, clamped to [1, 7].
OceanScores score_ocean(const FeatureVector& features, const TraitModels& models);

/// Maps a bundle of utterances to OCEAN scores.
class OceanRecogniser {
 public:
  virtual ~OceanRecogniser() = default;
  virtual OceanScores score(const UtteranceRefs& utterances) const = 0;
};

class LinearRecogniser final : public OceanRecogniser {
 public:
  LinearRecogniser(Lexicon lexicon, NormTable norms, TraitModels models);

  static LinearRecogniser load_files(const std::string& lexicon_path, const std::string& norms_path,
                                     const std::string& traits_path);

  OceanScores score(const UtteranceRefs& utterances) const override;
  FeatureVector features(const UtteranceRefs& utterances) const;

  const Lexicon& lexicon() const { return lexicon_; }
  const NormTable& norms() const { return norms_; }
  const TraitModels& models() const { return models_; }

 private:
  Lexicon lexicon_;
  NormTable norms_;
  TraitModels models_;
};

/// Mean of `n_samples` scores, each over `sample_size` utterances drawn
/// without replacement. Samples are drawn independently of one another.
OceanScores profile_speaker(const std::vector<Words>& utterances, std::size_t n_samples,
                            std::size_t sample_size, std::uint64_t seed, const OceanRecogniser& recogniser);

}  // namespace persona
