#include "persona/generate.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "persona/text_util.hpp"

namespace persona {

namespace {

// Runs the decoder, choosing each next token with `pick`.
template <typename Pick>
GeneratedResponse run_decoder(PersonaModel& model, const Vocabulary& vocab, const TokenIds& context,
                              const Persona& persona, std::size_t max_len, Pick&& pick) {
  Tape tape;
  auto enc = encode(tape, model, context);
  Var pv = persona_vector(tape, model, persona);
  DecoderState state = initial_decoder_state(tape, model, enc);
  TokenId prev = Vocabulary::kStart;
  GeneratedResponse out;
  out.persona = persona;
  while (out.tokens.size() < max_len) {
    auto step = decode_step(tape, model, state, prev, pv, enc);
    auto probs = softmax(tape.value(step.logits));
    TokenId next = pick(probs);
    if (next == Vocabulary::kEnd) break;
    out.tokens.push_back(next);
    state = std::move(step.state);
    prev = next;
  }
  out.text = detokenize(vocab.decode(out.tokens));
  return out;
}

}  // namespace

void GenerationConfig::validate() const {
  if (top_k < 1) throw std::invalid_argument("top_k must be at least 1");
  if (max_response_length < 1) throw std::invalid_argument("max_response_length must be at least 1");
}

bool is_generatable(TokenId id) { return id != Vocabulary::kPad && id != Vocabulary::kStart; }

GeneratedResponse stochastic_greedy_sample(PersonaModel& model, const Vocabulary& vocab, const TokenIds& context,
                                           const Persona& persona, const GenerationConfig& config, Rng& rng) {
  config.validate();
  std::vector<TokenId> order;
  return run_decoder(model, vocab, context, persona, config.max_response_length, [&](const std::vector<double>& p) {
    order.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (is_generatable(static_cast<TokenId>(i))) order.push_back(static_cast<TokenId>(i));
    }
    const std::size_t k = std::min(config.top_k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](TokenId a, TokenId b) {
                        const double pa = p[static_cast<std::size_t>(a)], pb = p[static_cast<std::size_t>(b)];
                        return pa > pb || (pa == pb && a < b);
                      });
    double mass = 0.0;
    for (std::size_t i = 0; i < k; ++i) mass += p[static_cast<std::size_t>(order[i])];
    double u = rng.uniform() * mass;
    for (std::size_t i = 0; i < k; ++i) {
      u -= p[static_cast<std::size_t>(order[i])];
      if (u < 0.0) return order[i];
    }
    return order[k - 1];
  });
}

GeneratedResponse greedy_decode(PersonaModel& model, const Vocabulary& vocab, const TokenIds& context,
                                const Persona& persona, std::size_t max_response_length) {
  return run_decoder(model, vocab, context, persona, max_response_length, [](const std::vector<double>& p) {
    TokenId best = -1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto id = static_cast<TokenId>(i);
      if (!is_generatable(id)) continue;
      if (best < 0 || p[i] > p[static_cast<std::size_t>(best)]) best = id;
    }
    return best;
  });
}

std::vector<GeneratedResponse> generate_corpus(PersonaModel& model, const Vocabulary& vocab,
                                               const std::vector<TokenIds>& contexts,
                                               const std::vector<Persona>& personas, const GenerationConfig& config) {
  if (contexts.empty()) throw std::invalid_argument("generate_corpus: no contexts");
  config.validate();
  std::vector<GeneratedResponse> out;
  out.reserve(contexts.size() * personas.size());
  for (std::size_t j = 0; j < personas.size(); ++j) {
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      Rng rng(derive_seed(config.seed, i, j));
      auto r = stochastic_greedy_sample(model, vocab, contexts[i], personas[j], config, rng);
      r.context_index = i;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::optional<FilterMode> parse_filter_mode(std::string_view s) {
  if (s == "common") return FilterMode::kCommon;
  if (s == "global") return FilterMode::kGlobal;
  return std::nullopt;
}

ResponsesByPersona group_by_persona(const std::vector<GeneratedResponse>& responses) {
  ResponsesByPersona out;
  for (const auto& r : responses) out[persona_label(r.persona)].push_back(r.text);
  return out;
}

std::vector<std::string> most_frequent_common(const ResponsesByPersona& responses, std::size_t n, FilterMode mode) {
  if (n == 0 || responses.empty()) return {};
  std::map<std::string, std::size_t> total;
  std::map<std::string, std::set<std::string>> producers;
  for (const auto& [persona, list] : responses) {
    for (const auto& r : list) {
      ++total[r];
      producers[r].insert(persona);
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [r, count] : total) {
    if (mode == FilterMode::kCommon && producers[r].size() != responses.size()) continue;
    ranked.emplace_back(r, count);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(n, ranked.size()); ++i) out.push_back(ranked[i].first);
  return out;
}

ResponsesByPersona filter_common_frequent(const ResponsesByPersona& responses, std::size_t n, FilterMode mode) {
  auto removed_list = most_frequent_common(responses, n, mode);
  std::set<std::string> removed(removed_list.begin(), removed_list.end());
  ResponsesByPersona out;
  for (const auto& [persona, list] : responses) {
    auto& kept = out[persona];
    for (const auto& r : list) {
      if (!removed.count(r)) kept.push_back(r);
    }
  }
  return out;
}

void write_generated(std::ostream& out, const std::vector<GeneratedResponse>& responses) {
  for (const auto& r : responses) {
    out << persona_label(r.persona) << '\t' << r.context_index << '\t' << r.text << '\n';
  }
}

std::vector<GeneratedRecord> read_generated(std::istream& in, const std::string& source) {
  std::vector<GeneratedRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 3) throw ParseError(source, lineno, "expected persona<TAB>context_index<TAB>text");
    auto idx = parse_int(f[1]);
    if (!idx || *idx < 0) throw ParseError(source, lineno, "bad context index");
    out.push_back(GeneratedRecord{std::string(f[0]), static_cast<std::size_t>(*idx), std::string(f[2])});
  }
  return out;
}

}  // namespace persona
