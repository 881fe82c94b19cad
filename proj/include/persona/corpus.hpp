#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "persona/ocean.hpp"
#include "persona/rng.hpp"

namespace persona {

using TokenId = std::int32_t;
using TokenIds = std::vector<TokenId>;
using Words = std::vector<std::string>;

/// A response's persona annotation: the speaker id, or the speaker's OCEAN scores.
using Persona = std::variant<std::string, OceanScores>;

// Speaker ids are written verbatim; OCEAN annotations as "ocean=o,c,e,a,n".
std::string persona_label(const Persona& p);
Persona parse_persona(std::string_view text);

/// Lowercases, splits on whitespace and emits each ASCII punctuation
/// character as its own token.
Words tokenize(std::string_view text);
std::string detokenize(const Words& words);

struct Utterance {
  std::string speaker_id;
  std::string scene_id;
  std::string text;
  Words words;
  TokenIds tokens;  // filled by encoding against a vocabulary
};

// Line records `scene_id<TAB>speaker_id<TAB>text`, or `speaker_id<TAB>text`
// with `###` lines separating scenes. Blank lines are ignored.
std::vector<Utterance> ingest_transcript(std::istream& in, const std::string& source = "<input>");
std::vector<Utterance> ingest_transcript_file(const std::string& path);

// One utterance per line, no speakers; the whole file is a single scene.
std::vector<Utterance> ingest_subtitles(std::istream& in, const std::string& source = "<input>");
std::vector<Utterance> ingest_subtitles_file(const std::string& path);

std::map<std::string, std::size_t> count_turns(const std::vector<Utterance>& utterances);
std::set<std::string> filter_speakers(const std::vector<Utterance>& utterances, std::size_t min_turns);

struct TextPair {
  Persona persona;
  Words context;
  Words response;
};

/// Each two adjacent turns in a scene form a pair annotated with the
/// responding speaker. Pairs never cross a scene boundary.
std::vector<TextPair> pair_consecutive(const std::vector<Utterance>& utterances);

// Keeps pairs whose response speaker is in `speakers`.
std::vector<TextPair> retain_responses(const std::vector<TextPair>& pairs,
                                       const std::set<std::string>& speakers);

// Replaces speaker-id personas by the mapped OCEAN scores.
std::vector<TextPair> annotate_with_ocean(const std::vector<TextPair>& pairs,
                                          const std::map<std::string, OceanScores>& table);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kStart = 2;
  static constexpr TokenId kEnd = 3;
  static constexpr std::size_t kReservedCount = 4;
  static constexpr std::string_view kReserved[kReservedCount] = {"<pad>", "<unk>", "<s>", "</s>"};

  Vocabulary();

  // Frequency-ordered, ties lexicographic, capped at max_size entries
  // including the reserved tokens.
  static Vocabulary from_counts(const std::map<std::string, std::size_t>& counts, std::size_t max_size);

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;

  TokenIds encode(const Words& words) const;
  Words decode(const TokenIds& ids) const;

  void save(std::ostream& out) const;
  static Vocabulary load(std::istream& in, const std::string& source = "<vocab>");

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

Vocabulary build_vocabulary(const std::vector<TextPair>& pairs, std::size_t max_size);

struct ContextResponsePair {
  Persona persona;
  TokenIds context;
  TokenIds response;  // ends with Vocabulary::kEnd
};

// Truncates from the right: the context keeps its first max_length tokens,
// the response its first max_length - 1 before the end token. Pairs with an
// empty side are dropped.
std::vector<ContextResponsePair> encode_pairs(const std::vector<TextPair>& pairs,
                                              const Vocabulary& vocab, std::size_t max_length);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> validation;
};

template <typename T>
Split<T> split_dataset(const std::vector<T>& items, std::size_t validation_count, std::uint64_t seed) {
  if (validation_count >= items.size()) {
    throw std::invalid_argument("split_dataset: validation_count must be smaller than the dataset");
  }
  Rng rng(seed);
  auto chosen = rng.sample_without_replacement(items.size(), validation_count);
  std::vector<char> in_validation(items.size(), 0);
  for (auto i : chosen) in_validation[i] = 1;
  Split<T> out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    (in_validation[i] ? out.validation : out.train).push_back(items[i]);
  }
  return out;
}

// `persona<TAB>context<TAB>response` with space-separated tokens.
void write_dataset(std::ostream& out, const std::vector<TextPair>& pairs);
std::vector<TextPair> read_dataset(std::istream& in, const std::string& source = "<dataset>");

}  // namespace persona
