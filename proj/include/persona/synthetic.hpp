#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "persona/corpus.hpp"
#include "persona/evaluation.hpp"
#include "persona/recogniser.hpp"

namespace persona {

// Reference corpora for tests and demos, built from the literal words of
// lexicon categories so the reference recogniser can tell them apart.

/// A speaking style: style words come from the named categories.
struct SyntheticStyle {
  std::string name;
  std::vector<std::string> categories;
};

struct UtteranceShape {
  std::size_t min_length = 4;
  std::size_t max_length = 8;
  double style_rate = 0.5;   // chance that a token is a style word
};

// Words belonging to no category of the lexicon.
const std::vector<std::string>& neutral_words();

// Literal words of the categories, in lexicon order.
std::vector<std::string> style_words(const Lexicon& lexicon, const std::vector<std::string>& categories);

Words synthetic_utterance(const std::vector<std::string>& style, const UtteranceShape& shape, Rng& rng);

/// One class per style with `per_class` utterances each.
std::vector<ClassCorpus> synthetic_classes(const Lexicon& lexicon, const std::vector<SyntheticStyle>& styles,
                                           std::size_t per_class, const UtteranceShape& shape, std::uint64_t seed);

/// Scenes of `turns` utterances whose speakers are drawn uniformly from the
/// styles (the speaker id is the style name).
std::vector<Utterance> synthetic_dialogue(const Lexicon& lexicon, const std::vector<SyntheticStyle>& styles,
                                          std::size_t scenes, std::size_t turns, const UtteranceShape& shape,
                                          std::uint64_t seed);

// The four contrasting styles of the gold-corpus check.
std::vector<SyntheticStyle> four_character_styles();
// Two personas with disjoint vocabularies: upbeat/social versus gloomy/anxious.
std::vector<SyntheticStyle> two_persona_styles();

// Writes `scene<TAB>speaker<TAB>text` lines.
void write_transcript(std::ostream& out, const std::vector<Utterance>& utterances);

/// Class-separated feature vectors: class k is centred on a random point of
/// [1,7]^dims with isotropic noise of `noise`.
LabeledSamples synthetic_feature_samples(std::size_t classes, std::size_t per_class, std::size_t dims, double noise,
                                         std::uint64_t seed);

struct SyntheticExperimentOptions {
  std::string lexicon;   // empty: the shipped lexicon
  std::size_t scenes = 100;
  std::size_t turns = 11;
  std::size_t contexts = 400;
  std::uint64_t seed = 1;
};

// Writes transcript.tsv, contexts.txt and desk.ini (two-persona corpus plus
// held-out contexts) into `dir`; returns the config path.
std::filesystem::path write_synthetic_experiment(const std::filesystem::path& dir,
                                                 const SyntheticExperimentOptions& options);

}  // namespace persona
