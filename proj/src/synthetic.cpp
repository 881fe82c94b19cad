#include "persona/synthetic.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

#include "persona/rng.hpp"

namespace persona {

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words = {
      "the", "a",    "it",    "is",    "was",  "that", "this",  "to",    "of",    "and",  "in",   "on",
      "at",  "there", "what", "so",    "just", "then", "now",   "here",  "thing", "time", "day",  "way",
      "going", "well", "okay", "yeah", "like", "get",  "got",   "see",   "come",  "go",   "room", "car",
      "door",  "coffee", "today", "tomorrow", "again", "around", "back", "down", "out", "up"};
  return words;
}

std::vector<std::string> style_words(const Lexicon& lexicon, const std::vector<std::string>& categories) {
  std::vector<std::string> out;
  for (const auto& name : categories) {
    const auto* cat = lexicon.find(name);
    if (!cat) throw std::invalid_argument("lexicon has no category '" + name + "'");
    if (cat->words.empty()) throw std::invalid_argument("category '" + name + "' has no literal words");
    out.insert(out.end(), cat->words.begin(), cat->words.end());
  }
  return out;
}

Words synthetic_utterance(const std::vector<std::string>& style, const UtteranceShape& shape, Rng& rng) {
  if (shape.min_length == 0 || shape.max_length < shape.min_length) {
    throw std::invalid_argument("synthetic_utterance: bad length range");
  }
  const auto& neutral = neutral_words();
  const std::size_t len = shape.min_length + rng.below(shape.max_length - shape.min_length + 1);
  Words w;
  bool has_style = false;
  for (std::size_t i = 0; i < len; ++i) {
    if (!style.empty() && rng.bernoulli(shape.style_rate)) {
      w.push_back(style[rng.below(style.size())]);
      has_style = true;
    } else {
      w.push_back(neutral[rng.below(neutral.size())]);
    }
  }
  // Every styled utterance carries at least one style word.
  if (!style.empty() && !has_style) w[rng.below(len)] = style[rng.below(style.size())];
  return w;
}

std::vector<ClassCorpus> synthetic_classes(const Lexicon& lexicon, const std::vector<SyntheticStyle>& styles,
                                           std::size_t per_class, const UtteranceShape& shape,
                                           std::uint64_t seed) {
  std::vector<ClassCorpus> out;
  for (std::size_t k = 0; k < styles.size(); ++k) {
    auto words = style_words(lexicon, styles[k].categories);
    Rng rng(derive_seed(seed, k));
    ClassCorpus c{styles[k].name, {}};
    for (std::size_t i = 0; i < per_class; ++i) c.utterances.push_back(synthetic_utterance(words, shape, rng));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Utterance> synthetic_dialogue(const Lexicon& lexicon, const std::vector<SyntheticStyle>& styles,
                                          std::size_t scenes, std::size_t turns, const UtteranceShape& shape,
                                          std::uint64_t seed) {
  if (styles.empty()) throw std::invalid_argument("synthetic_dialogue: no styles");
  std::vector<std::vector<std::string>> words;
  for (const auto& s : styles) words.push_back(style_words(lexicon, s.categories));
  Rng rng(seed);
  std::vector<Utterance> out;
  for (std::size_t s = 0; s < scenes; ++s) {
    const std::string scene = "scene" + std::to_string(s + 1);
    for (std::size_t t = 0; t < turns; ++t) {
      const std::size_t k = rng.below(styles.size());
      Utterance u;
      u.speaker_id = styles[k].name;
      u.scene_id = scene;
      u.words = synthetic_utterance(words[k], shape, rng);
      u.text = detokenize(u.words);
      out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<SyntheticStyle> four_character_styles() {
  return {{"sunny", {"posemo", "social", "we"}},
          {"gloomy", {"negemo", "anx", "self"}},
          {"driven", {"achieve", "certain"}},
          {"dreamer", {"insight", "tentat"}}};
}

std::vector<SyntheticStyle> two_persona_styles() {
  return {{"upbeat", {"posemo", "social"}}, {"gloomy", {"negemo", "anx"}}};
}

void write_transcript(std::ostream& out, const std::vector<Utterance>& utterances) {
  for (const auto& u : utterances) out << u.scene_id << '\t' << u.speaker_id << '\t' << u.text << '\n';
}

LabeledSamples synthetic_feature_samples(std::size_t classes, std::size_t per_class, std::size_t dims, double noise,
                                         std::uint64_t seed) {
  Rng rng(seed);
  LabeledSamples out;
  for (std::size_t k = 0; k < classes; ++k) {
    std::vector<double> centre(dims);
    for (auto& c : centre) c = rng.uniform(1.0, 7.0);
    for (std::size_t i = 0; i < per_class; ++i) {
      FeatureRow f(dims);
      for (std::size_t d = 0; d < dims; ++d) f[d] = centre[d] + noise * rng.normal();
      out.push_back(LabeledSample{std::move(f), static_cast<int>(k)});
    }
  }
  return out;
}

std::filesystem::path write_synthetic_experiment(const std::filesystem::path& dir,
                                                 const SyntheticExperimentOptions& o) {
  namespace fs = std::filesystem;
  const fs::path data_dir = fs::path(PERSONA_DATA_DIR);
  const fs::path lexicon = o.lexicon.empty() ? data_dir / "lexicon.txt" : fs::path(o.lexicon);
  auto lex = Lexicon::load_file(lexicon.string());
  auto styles = two_persona_styles();
  UtteranceShape shape;
  fs::create_directories(dir);
  {
    std::ofstream t(dir / "transcript.tsv");
    write_transcript(t, synthetic_dialogue(lex, styles, o.scenes, o.turns, shape, derive_seed(o.seed, "dialogue")));
    if (!t) throw std::runtime_error("cannot write " + (dir / "transcript.tsv").string());
  }
  {
    std::ofstream c(dir / "contexts.txt");
    for (const auto& u : synthetic_dialogue(lex, styles, 1, o.contexts, shape, derive_seed(o.seed, "contexts"))) {
      c << u.text << '\n';
    }
  }
  const fs::path config = dir / "desk.ini";
  std::ofstream cfg(config);
  cfg << "# Desk-scale run on the synthetic two-persona corpus.\n"
      << "[run]\nseed = " << o.seed << "\n\n"
      << "[data]\nseries = synthetic\ntranscripts = transcript.tsv\ncontexts = contexts.txt\n"
      << "lexicon = " << fs::absolute(lexicon).string() << "\n"
      << "norms = " << fs::absolute(data_dir / "norms.tsv").string() << "\n"
      << "traits = " << fs::absolute(data_dir / "traits.tsv").string() << "\n"
      << "min_turns = 100\nvalidation_count = 50\n";
  if (!cfg) throw std::runtime_error("cannot write " + config.string());
  return config;
}

}  // namespace persona
