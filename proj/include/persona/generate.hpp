#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include "persona/corpus.hpp"
#include "persona/rng.hpp"
#include "persona/seq2seq.hpp"

namespace persona {

struct GenerationConfig {
  std::size_t top_k = 20;
  std::size_t max_response_length = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedResponse {
  Persona persona;
  std::size_t context_index = 0;
  TokenIds tokens;   // without the end token
  std::string text;
};

// Tokens never emitted by the decoder: padding and the start symbol.
bool is_generatable(TokenId id);

/// Samples from the renormalised top_k slice of each step's distribution
/// (ties in probability resolved towards the lower token id) until the end
/// token or max_response_length tokens.
GeneratedResponse stochastic_greedy_sample(PersonaModel& model, const Vocabulary& vocab, const TokenIds& context,
                                           const Persona& persona, const GenerationConfig& config, Rng& rng);

// Argmax decoding.
GeneratedResponse greedy_decode(PersonaModel& model, const Vocabulary& vocab, const TokenIds& context,
                                const Persona& persona, std::size_t max_response_length);

/// One response per (context, persona). Each pair draws from its own stream
/// derived from (seed, context index, persona index), so the output does
/// not depend on the order in which pairs are visited.
std::vector<GeneratedResponse> generate_corpus(PersonaModel& model, const Vocabulary& vocab,
                                               const std::vector<TokenIds>& contexts,
                                               const std::vector<Persona>& personas, const GenerationConfig& config);

enum class FilterMode { kCommon, kGlobal };

std::optional<FilterMode> parse_filter_mode(std::string_view s);

using ResponsesByPersona = std::map<std::string, std::vector<std::string>>;

ResponsesByPersona group_by_persona(const std::vector<GeneratedResponse>& responses);

/// Removes every occurrence of the n most frequent responses. In kCommon
/// mode candidates are the responses produced by every persona; in kGlobal
/// mode every response is a candidate. Ranking is by total count, ties
/// lexicographic.
ResponsesByPersona filter_common_frequent(const ResponsesByPersona& responses, std::size_t n,
                                          FilterMode mode = FilterMode::kCommon);

// The strings filter_common_frequent would remove.
std::vector<std::string> most_frequent_common(const ResponsesByPersona& responses, std::size_t n,
                                              FilterMode mode = FilterMode::kCommon);

// `persona<TAB>context_index<TAB>response_text`
void write_generated(std::ostream& out, const std::vector<GeneratedResponse>& responses);
struct GeneratedRecord {
  std::string persona;
  std::size_t context_index = 0;
  std::string text;
};
std::vector<GeneratedRecord> read_generated(std::istream& in, const std::string& source = "<generated>");

}  // namespace persona
