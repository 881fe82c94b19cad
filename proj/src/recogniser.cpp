#include "persona/recogniser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <stdexcept>

#include "persona/rng.hpp"
#include "persona/text_util.hpp"

namespace persona {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

bool LexiconCategory::matches(const std::string& token) const {
  if (words.count(token)) return true;
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return token.starts_with(p); });
}

Lexicon::Lexicon(std::vector<LexiconCategory> categories) : categories_(std::move(categories)) {
  for (const auto& c : categories_) {
    if (c.words.empty() && c.prefixes.empty()) {
      throw std::invalid_argument("lexicon category '" + c.name + "' has no entries");
    }
  }
}

Lexicon Lexicon::load(std::istream& in, const std::string& source) {
  std::vector<LexiconCategory> cats;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ParseError(source, lineno, "malformed section header");
      auto name = std::string(trim(t.substr(1, t.size() - 2)));
      for (const auto& c : cats) {
        if (c.name == name) throw ParseError(source, lineno, "duplicate category '" + name + "'");
      }
      cats.push_back(LexiconCategory{name, {}, {}});
      continue;
    }
    if (cats.empty()) throw ParseError(source, lineno, "entry before any [category] header");
    auto entry = lowercase(t);
    if (entry.size() > 1 && entry.back() == '*') {
      entry.pop_back();
      cats.back().prefixes.push_back(entry);
    } else {
      cats.back().words.insert(entry);
    }
  }
  for (const auto& c : cats) {
    if (c.words.empty() && c.prefixes.empty()) {
      throw ParseError(source, lineno, "category '" + c.name + "' has no entries");
    }
  }
  return Lexicon(std::move(cats));
}

Lexicon Lexicon::load_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load(in, path);
}

const LexiconCategory* Lexicon::find(const std::string& name) const {
  for (const auto& c : categories_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void NormTable::set(const std::string& dimension, const std::string& word, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("norm values must be finite");
  table_[dimension][word] = value;
}

const double* NormTable::lookup(const std::string& dimension, const std::string& word) const {
  auto d = table_.find(dimension);
  if (d == table_.end()) return nullptr;
  auto w = d->second.find(word);
  return w == d->second.end() ? nullptr : &w->second;
}

std::vector<std::string> NormTable::dimensions() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : table_) out.push_back(name);
  return out;
}

NormTable NormTable::load(std::istream& in, const std::string& source) {
  NormTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '\t');
    if (f.size() != 3) throw ParseError(source, lineno, "expected word<TAB>norm<TAB>value");
    auto v = parse_double(f[2]);
    if (!v || !std::isfinite(*v)) throw ParseError(source, lineno, "bad norm value");
    t.set(std::string(trim(f[1])), lowercase(trim(f[0])), *v);
  }
  return t;
}

NormTable NormTable::load_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load(in, path);
}

std::string category_feature(const std::string& category) { return "cat:" + category; }
std::string norm_feature(const std::string& dimension) { return "norm:" + dimension; }

FeatureVector extract_features(const UtteranceRefs& utterances, const Lexicon& lexicon, const NormTable& norms) {
  // Everything is computed from ordered word counts, so the result does not
  // depend on utterance order, bit for bit.
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const Words* u : utterances) {
    for (const auto& w : *u) ++counts[w];
    total += u->size();
  }
  if (utterances.empty() || total == 0) {
    throw std::invalid_argument("extract_features: sample has no tokens");
  }

  FeatureVector f;
  const double n = static_cast<double>(total);
  for (const auto& cat : lexicon.categories()) {
    std::size_t hits = 0;
    for (const auto& [w, c] : counts) {
      if (cat.matches(w)) hits += c;
    }
    f[category_feature(cat.name)] = static_cast<double>(hits) / n;
  }
  for (const auto& dim : norms.dimensions()) {
    double sum = 0.0;
    std::size_t covered = 0;
    for (const auto& [w, c] : counts) {
      if (const double* v = norms.lookup(dim, w)) {
        sum += *v * static_cast<double>(c);
        covered += c;
      }
    }
    f[norm_feature(dim)] = covered ? sum / static_cast<double>(covered) : 0.0;
  }
  f[kMeanLengthFeature] = n / static_cast<double>(utterances.size());
  f[kTypeTokenFeature] = static_cast<double>(counts.size()) / n;
  return f;
}

FeatureVector extract_features(const std::vector<Words>& utterances, const Lexicon& lexicon,
                               const NormTable& norms) {
  UtteranceRefs refs;
  refs.reserve(utterances.size());
  for (const auto& u : utterances) refs.push_back(&u);
  return extract_features(refs, lexicon, norms);
}

TraitModels load_trait_models(std::istream& in, const std::string& source) {
  TraitModels models;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto f = split(s, '\t');
    if (f.size() != 3) throw ParseError(source, lineno, "expected trait<TAB>feature<TAB>weight");
    auto trait = parse_trait(f[0]);
    if (!trait) throw ParseError(source, lineno, "unknown trait '" + std::string(f[0]) + "'");
    auto w = parse_double(f[2]);
    if (!w || !std::isfinite(*w)) throw ParseError(source, lineno, "bad weight");
    auto& m = models[static_cast<std::size_t>(*trait)];
    auto feature = std::string(trim(f[1]));
    if (feature == "__intercept__") {
      m.intercept = *w;
    } else {
      m.weights[feature] = *w;
    }
  }
  return models;
}

TraitModels load_trait_models_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load_trait_models(in, path);
}

OceanScores score_ocean(const FeatureVector& features, const TraitModels& models) {
  OceanScores out;
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    double s = models[t].intercept;
    for (const auto& [name, w] : models[t].weights) {
      auto it = features.find(name);
      if (it == features.end()) {
        throw std::invalid_argument("trait model references unknown feature '" + name + "'");
      }
      s += w * it->second;
    }
    out[t] = std::clamp(s, kOceanMin, kOceanMax);
  }
  return out;
}

LinearRecogniser::LinearRecogniser(Lexicon lexicon, NormTable norms, TraitModels models)
    : lexicon_(std::move(lexicon)), norms_(std::move(norms)), models_(std::move(models)) {}

LinearRecogniser LinearRecogniser::load_files(const std::string& lexicon_path, const std::string& norms_path,
                                              const std::string& traits_path) {
  return LinearRecogniser(Lexicon::load_file(lexicon_path), NormTable::load_file(norms_path),
                          load_trait_models_file(traits_path));
}

FeatureVector LinearRecogniser::features(const UtteranceRefs& utterances) const {
  return extract_features(utterances, lexicon_, norms_);
}

OceanScores LinearRecogniser::score(const UtteranceRefs& utterances) const {
  return score_ocean(features(utterances), models_);
}

OceanScores profile_speaker(const std::vector<Words>& utterances, std::size_t n_samples,
                            std::size_t sample_size, std::uint64_t seed, const OceanRecogniser& recogniser) {
  if (n_samples == 0 || sample_size == 0) throw std::invalid_argument("profile_speaker: empty sampling plan");
  if (utterances.size() < sample_size) {
    throw std::invalid_argument("profile_speaker: " + std::to_string(utterances.size()) +
                                " utterances, need at least " + std::to_string(sample_size));
  }
  std::array<double, kTraitCount> sums{};
  for (std::size_t s = 0; s < n_samples; ++s) {
    Rng rng(derive_seed(seed, s));
    UtteranceRefs bundle;
    for (auto i : rng.sample_without_replacement(utterances.size(), sample_size)) {
      bundle.push_back(&utterances[i]);
    }
    auto o = recogniser.score(bundle);
    for (std::size_t t = 0; t < kTraitCount; ++t) sums[t] += o[t];
  }
  OceanScores mean;
  for (std::size_t t = 0; t < kTraitCount; ++t) mean[t] = sums[t] / static_cast<double>(n_samples);
  return mean;
}

}  // namespace persona
