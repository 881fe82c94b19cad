#include "persona/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>

#include "persona/text_util.hpp"

namespace persona {

namespace {

constexpr std::string_view kOceanPrefix = "ocean=";

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Only ASCII punctuation splits; UTF-8 continuation bytes stay inside words.
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

std::string persona_label(const Persona& p) {
  if (const auto* speaker = std::get_if<std::string>(&p)) return *speaker;
  return std::string(kOceanPrefix) + std::get<OceanScores>(p).to_string();
}

Persona parse_persona(std::string_view text) {
  if (text.starts_with(kOceanPrefix)) {
    auto o = OceanScores::parse(text.substr(kOceanPrefix.size()));
    if (!o) throw std::invalid_argument("malformed OCEAN persona: " + std::string(text));
    return *o;
  }
  return std::string(text);
}

Words tokenize(std::string_view text) {
  Words out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      current += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
  }
  flush();
  return out;
}

std::string detokenize(const Words& words) { return join(words, " "); }

std::vector<Utterance> ingest_transcript(std::istream& in, const std::string& source) {
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t scene_counter = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (trim(line) == "###") {
      ++scene_counter;
      continue;
    }
    auto fields = split(line, '\t');
    Utterance u;
    if (fields.size() == 1) {
      throw ParseError(source, lineno, "record has no speaker field");
    } else if (fields.size() == 2) {
      u.scene_id = source + "#" + std::to_string(scene_counter);
      u.speaker_id = std::string(trim(fields[0]));
      u.text = std::string(fields[1]);
    } else {
      u.scene_id = std::string(trim(fields[0]));
      u.speaker_id = std::string(trim(fields[1]));
      std::string text(fields[2]);
      for (std::size_t i = 3; i < fields.size(); ++i) {
        text += ' ';
        text += fields[i];
      }
      u.text = std::move(text);
      if (u.scene_id.empty()) throw ParseError(source, lineno, "empty scene id");
    }
    if (u.speaker_id.empty()) throw ParseError(source, lineno, "record has no speaker field");
    u.words = tokenize(u.text);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> ingest_transcript_file(const std::string& path) {
  auto in = open_or_throw(path);
  return ingest_transcript(in, path);
}

std::vector<Utterance> ingest_subtitles(std::istream& in, const std::string& source) {
  std::vector<Utterance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    Utterance u;
    u.scene_id = source;
    u.text = line;
    u.words = tokenize(line);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> ingest_subtitles_file(const std::string& path) {
  auto in = open_or_throw(path);
  return ingest_subtitles(in, path);
}

std::map<std::string, std::size_t> count_turns(const std::vector<Utterance>& utterances) {
  std::map<std::string, std::size_t> counts;
  for (const auto& u : utterances) ++counts[u.speaker_id];
  return counts;
}

std::set<std::string> filter_speakers(const std::vector<Utterance>& utterances, std::size_t min_turns) {
  if (min_turns < 1) throw std::invalid_argument("filter_speakers: min_turns must be >= 1");
  std::set<std::string> out;
  for (const auto& [speaker, n] : count_turns(utterances)) {
    if (n >= min_turns) out.insert(speaker);
  }
  return out;
}

std::vector<TextPair> pair_consecutive(const std::vector<Utterance>& utterances) {
  std::vector<TextPair> out;
  for (std::size_t i = 1; i < utterances.size(); ++i) {
    const auto& prev = utterances[i - 1];
    const auto& cur = utterances[i];
    if (prev.scene_id != cur.scene_id) continue;
    out.push_back(TextPair{cur.speaker_id, prev.words, cur.words});
  }
  return out;
}

std::vector<TextPair> retain_responses(const std::vector<TextPair>& pairs,
                                       const std::set<std::string>& speakers) {
  std::vector<TextPair> out;
  for (const auto& p : pairs) {
    const auto* speaker = std::get_if<std::string>(&p.persona);
    if (speaker && speakers.count(*speaker)) out.push_back(p);
  }
  return out;
}

std::vector<TextPair> annotate_with_ocean(const std::vector<TextPair>& pairs,
                                          const std::map<std::string, OceanScores>& table) {
  std::vector<TextPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    TextPair q = p;
    if (const auto* speaker = std::get_if<std::string>(&p.persona)) {
      auto it = table.find(*speaker);
      if (it == table.end()) throw std::invalid_argument("no OCEAN profile for speaker " + *speaker);
      q.persona = it->second;
    }
    out.push_back(std::move(q));
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto r : kReserved) add(std::string(r));
}

void Vocabulary::add(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_counts(const std::map<std::string, std::size_t>& counts, std::size_t max_size) {
  if (max_size <= kReservedCount) {
    throw std::invalid_argument("vocabulary max_size must exceed the reserved token count");
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [tok, n] : counts) {
    bool reserved = std::find(std::begin(kReserved), std::end(kReserved), tok) != std::end(kReserved);
    if (!reserved) ranked.emplace_back(tok, n);
  }
  // std::map iteration is already lexicographic, so a stable sort on count
  // leaves ties in lexicographic order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (v.size() >= max_size) break;
    v.add(tok);
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

TokenIds Vocabulary::encode(const Words& words) const {
  TokenIds out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

Words Vocabulary::decode(const TokenIds& ids) const {
  Words out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(token(id));
  return out;
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(std::istream& in, const std::string& source) {
  Vocabulary v;
  v.tokens_.clear();
  v.ids_.clear();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno <= kReservedCount && line != kReserved[lineno - 1]) {
      throw ParseError(source, lineno, "expected reserved token " + std::string(kReserved[lineno - 1]));
    }
    if (v.ids_.count(line)) throw ParseError(source, lineno, "duplicate token '" + line + "'");
    v.add(line);
  }
  if (v.size() < kReservedCount) throw ParseError(source, lineno, "vocabulary truncated");
  return v;
}

Vocabulary build_vocabulary(const std::vector<TextPair>& pairs, std::size_t max_size) {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    for (const auto& w : p.context) ++counts[w];
    for (const auto& w : p.response) ++counts[w];
  }
  return Vocabulary::from_counts(counts, max_size);
}

std::vector<ContextResponsePair> encode_pairs(const std::vector<TextPair>& pairs,
                                              const Vocabulary& vocab, std::size_t max_length) {
  if (max_length < 2) throw std::invalid_argument("max_length must be at least 2");
  std::vector<ContextResponsePair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.context.empty() || p.response.empty()) continue;
    ContextResponsePair e;
    e.persona = p.persona;
    e.context = vocab.encode(p.context);
    if (e.context.size() > max_length) e.context.resize(max_length);
    e.response = vocab.encode(p.response);
    if (e.response.size() > max_length - 1) e.response.resize(max_length - 1);
    e.response.push_back(Vocabulary::kEnd);
    out.push_back(std::move(e));
  }
  return out;
}

void write_dataset(std::ostream& out, const std::vector<TextPair>& pairs) {
  for (const auto& p : pairs) {
    out << persona_label(p.persona) << '\t' << detokenize(p.context) << '\t' << detokenize(p.response)
        << '\n';
  }
}

std::vector<TextPair> read_dataset(std::istream& in, const std::string& source) {
  std::vector<TextPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(source, lineno, "expected 3 tab-separated fields");
    TextPair p;
    try {
      p.persona = parse_persona(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    }
    for (auto w : split(fields[1], ' '))
      if (!w.empty()) p.context.emplace_back(w);
    for (auto w : split(fields[2], ' '))
      if (!w.empty()) p.response.emplace_back(w);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace persona
