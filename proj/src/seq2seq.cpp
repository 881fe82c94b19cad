#include "persona/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "persona/checkpoint.hpp"
#include "persona/text_util.hpp"

namespace persona {

namespace {

constexpr const char* kSrcEmbedding = "src_embedding";
constexpr const char* kTgtEmbedding = "tgt_embedding";
constexpr const char* kAttention = "attention.weight";
constexpr const char* kCombine = "output.combine";
constexpr const char* kOutput = "output.weight";
constexpr const char* kSpeakerEmbedding = "speaker_embedding";
constexpr const char* kPersonalityProjection = "personality_projection";

std::size_t decoder_input_width(const ModelConfig& c, std::size_t layer) {
  return layer == 0 ? 2 * c.hidden + c.persona_width() : c.hidden;
}

ParameterSet fresh_parameters(const ModelConfig& c, std::size_t speaker_count, std::uint64_t seed) {
  Rng rng(seed);
  const double lo = -c.init_range, hi = c.init_range;
  const std::size_t d = c.hidden, v = c.vocab_size;
  ParameterSet p;
  p.add(kSrcEmbedding, init_uniform({v, d}, lo, hi, rng));
  p.add(kTgtEmbedding, init_uniform({v, d}, lo, hi, rng));
  for (std::size_t k = 0; k < c.layers; ++k) {
    p.add(PersonaModel::layer_weight("encoder", k), init_uniform({4 * d, 2 * d}, lo, hi, rng));
    p.add(PersonaModel::layer_bias("encoder", k), init_uniform({4 * d}, lo, hi, rng));
  }
  for (std::size_t k = 0; k < c.layers; ++k) {
    p.add(PersonaModel::layer_weight("decoder", k),
          init_uniform({4 * d, decoder_input_width(c, k) + d}, lo, hi, rng));
    p.add(PersonaModel::layer_bias("decoder", k), init_uniform({4 * d}, lo, hi, rng));
  }
  p.add(kAttention, init_uniform({d, d}, lo, hi, rng));
  p.add(kCombine, init_uniform({d, 2 * d}, lo, hi, rng));
  p.add(kOutput, init_uniform({v, d}, lo, hi, rng));
  if (c.conditioning == Conditioning::kSpeaker) {
    if (speaker_count == 0) throw std::invalid_argument("speaker model needs at least one speaker");
    p.add(kSpeakerEmbedding, init_uniform({speaker_count, d}, lo, hi, rng));
  } else if (c.conditioning == Conditioning::kPersonality) {
    p.add(kPersonalityProjection, init_uniform({kTraitCount, d}, lo, hi, rng));
  }
  return p;
}

void check_token(const PersonaModel& model, TokenId t) {
  if (t < 0 || static_cast<std::size_t>(t) >= model.config().vocab_size) {
    throw std::out_of_range("token id " + std::to_string(t) + " outside the vocabulary");
  }
}

struct SequenceScore {
  long double log_prob = 0.0L;
  std::vector<double> steps;
};

SequenceScore score_sequence(PersonaModel& model, const TokenIds& context, const TokenIds& response,
                             const Persona& persona) {
  if (response.empty()) throw std::invalid_argument("response must be non-empty");
  Tape tape;
  auto enc = encode(tape, model, context);
  Var pv = persona_vector(tape, model, persona);
  DecoderState state = initial_decoder_state(tape, model, enc);
  TokenId prev = Vocabulary::kStart;
  SequenceScore out;
  for (TokenId y : response) {
    check_token(model, y);
    auto step = decode_step(tape, model, state, prev, pv, enc);
    auto lp = log_softmax_extended(tape.value(step.logits));
    out.log_prob += lp[static_cast<std::size_t>(y)];
    out.steps.push_back(static_cast<double>(lp[static_cast<std::size_t>(y)]));
    state = step.state;
    prev = y;
  }
  return out;
}

}  // namespace

std::string_view to_string(Conditioning c) {
  switch (c) {
    case Conditioning::kNone: return "none";
    case Conditioning::kSpeaker: return "speaker";
    case Conditioning::kPersonality: return "personality";
  }
  return "none";
}

std::optional<Conditioning> parse_conditioning(std::string_view s) {
  if (s == "none") return Conditioning::kNone;
  if (s == "speaker") return Conditioning::kSpeaker;
  if (s == "personality") return Conditioning::kPersonality;
  return std::nullopt;
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.layers = 4;
  c.hidden = 1024;
  c.vocab_size = 25000;
  c.max_input_length = 50;
  c.batch_size = 128;
  c.dropout = 0.2;
  c.learning_rate = 1.0;
  c.halve_after = 6;
  c.clip_threshold = 5.0;
  c.init_range = 0.1;
  return c;
}

void ModelConfig::validate() const {
  if (layers == 0 || hidden == 0 || max_input_length == 0 || batch_size == 0) {
    throw std::invalid_argument("model sizes must be positive");
  }
  if (vocab_size <= Vocabulary::kReservedCount) throw std::invalid_argument("vocabulary too small");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
  if (!(learning_rate > 0.0) || !(clip_threshold > 0.0) || !(init_range > 0.0)) {
    throw std::invalid_argument("learning rate, clip threshold and init range must be positive");
  }
}

std::string ModelConfig::serialize() const {
  std::ostringstream s;
  s << "layers=" << layers << " hidden=" << hidden << " vocab_size=" << vocab_size
    << " max_input_length=" << max_input_length << " batch_size=" << batch_size
    << " dropout=" << format_double(dropout) << " learning_rate=" << format_double(learning_rate)
    << " halve_after=" << halve_after << " clip_threshold=" << format_double(clip_threshold)
    << " init_range=" << format_double(init_range) << " conditioning=" << to_string(conditioning);
  return s.str();
}

ModelConfig ModelConfig::parse(std::string_view line) {
  ModelConfig c;
  for (auto field : split(trim(line), ' ')) {
    if (field.empty()) continue;
    auto eq = field.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("bad config field: " + std::string(field));
    auto key = field.substr(0, eq);
    auto val = field.substr(eq + 1);
    auto as_size = [&]() {
      auto v = parse_int(val);
      if (!v || *v < 0) throw std::invalid_argument("bad value for " + std::string(key));
      return static_cast<std::size_t>(*v);
    };
    auto as_double = [&]() {
      auto v = parse_double(val);
      if (!v) throw std::invalid_argument("bad value for " + std::string(key));
      return *v;
    };
    if (key == "layers") c.layers = as_size();
    else if (key == "hidden") c.hidden = as_size();
    else if (key == "vocab_size") c.vocab_size = as_size();
    else if (key == "max_input_length") c.max_input_length = as_size();
    else if (key == "batch_size") c.batch_size = as_size();
    else if (key == "dropout") c.dropout = as_double();
    else if (key == "learning_rate") c.learning_rate = as_double();
    else if (key == "halve_after") c.halve_after = as_size();
    else if (key == "clip_threshold") c.clip_threshold = as_double();
    else if (key == "init_range") c.init_range = as_double();
    else if (key == "conditioning") {
      auto m = parse_conditioning(val);
      if (!m) throw std::invalid_argument("unknown conditioning " + std::string(val));
      c.conditioning = *m;
    } else {
      throw std::invalid_argument("unknown config key " + std::string(key));
    }
  }
  return c;
}

PersonaModel::PersonaModel(ModelConfig config, std::vector<std::string> speakers, std::uint64_t seed)
    : config_(config), speakers_(std::move(speakers)), seed_(seed) {
  config_.validate();
  params_ = fresh_parameters(config_, speakers_.size(), seed);
}

PersonaModel::PersonaModel(ModelConfig config, std::vector<std::string> speakers, ParameterSet params,
                           std::map<std::string, OceanScores> ocean_table, std::uint64_t seed)
    : config_(config),
      speakers_(std::move(speakers)),
      params_(std::move(params)),
      ocean_table_(std::move(ocean_table)),
      seed_(seed) {
  config_.validate();
  check_shapes();
}

void PersonaModel::check_shapes() const {
  ParameterSet expected = fresh_parameters(config_, speakers_.size(), 0);
  if (expected.tensors().size() != params_.tensors().size()) {
    throw std::invalid_argument("parameter set does not match the configuration");
  }
  for (const auto& [name, t] : expected.tensors()) {
    if (!params_.contains(name)) throw std::invalid_argument("missing parameter " + name);
    if (params_.get(name).shape != t.shape) throw std::invalid_argument("shape mismatch for " + name);
  }
}

std::optional<std::size_t> PersonaModel::speaker_index(const std::string& speaker) const {
  auto it = std::find(speakers_.begin(), speakers_.end(), speaker);
  if (it == speakers_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - speakers_.begin());
}

std::string PersonaModel::layer_weight(std::string_view side, std::size_t layer) {
  return std::string(side) + ".l" + std::to_string(layer) + ".weight";
}

std::string PersonaModel::layer_bias(std::string_view side, std::size_t layer) {
  return std::string(side) + ".l" + std::to_string(layer) + ".bias";
}

LstmLayerParams PersonaModel::layer(std::string_view side, std::size_t k) {
  return LstmLayerParams{&params_.get(layer_weight(side, k)), &params_.get(layer_bias(side, k))};
}

std::array<double, kTraitCount> normalize_ocean(const OceanScores& o) {
  if (!o.in_range()) throw std::invalid_argument("OCEAN scores must lie in [1, 7]");
  std::array<double, kTraitCount> n{};
  for (std::size_t t = 0; t < kTraitCount; ++t) n[t] = (o[t] - 4.0) / 3.0;
  return n;
}

std::vector<double> personality_embedding(const OceanScores& o, const Tensor& projection) {
  auto n = normalize_ocean(o);
  if (projection.rows() != kTraitCount) throw std::invalid_argument("projection must have 5 rows");
  std::vector<double> v(projection.cols(), 0.0);
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += projection.at(t, j) * n[t];
  }
  return v;
}

EncoderOutput encode(Tape& tape, PersonaModel& model, const TokenIds& context, bool training, Rng* rng) {
  const auto& c = model.config();
  if (context.empty()) throw std::invalid_argument("encode: empty context");
  if (context.size() > c.max_input_length) throw std::invalid_argument("encode: context longer than max_input_length");
  if (training && rng == nullptr) throw std::invalid_argument("encode: training requires an rng");
  const double rate = training ? c.dropout : 0.0;

  EncoderOutput out;
  std::vector<LstmLayerState> state(c.layers, LstmLayerState{tape.zeros(c.hidden), tape.zeros(c.hidden)});
  Tensor& emb = model.params().get(kSrcEmbedding);
  for (TokenId tok : context) {
    check_token(model, tok);
    Var x = tape.row(emb, static_cast<std::size_t>(tok));
    for (std::size_t k = 0; k < c.layers; ++k) {
      if (rate > 0.0) x = dropout(tape, x, rate, *rng, true);
      state[k] = lstm_cell_step(tape, x, state[k], model.layer("encoder", k));
      x = state[k].h;
    }
    out.hiddens.push_back(x);
  }
  out.keys = attention_keys(tape, model.params().get(kAttention), out.hiddens);
  out.final_state = std::move(state);
  return out;
}

Var persona_vector(Tape& tape, PersonaModel& model, const Persona& persona) {
  switch (model.config().conditioning) {
    case Conditioning::kNone:
      return Var{};
    case Conditioning::kSpeaker: {
      const auto* speaker = std::get_if<std::string>(&persona);
      if (!speaker) throw std::invalid_argument("speaker model needs a speaker-id persona");
      auto idx = model.speaker_index(*speaker);
      if (!idx) throw std::invalid_argument("unknown speaker " + *speaker);
      return tape.row(model.params().get(kSpeakerEmbedding), *idx);
    }
    case Conditioning::kPersonality: {
      OceanScores o;
      if (const auto* scores = std::get_if<OceanScores>(&persona)) {
        o = *scores;
      } else {
        const auto& speaker = std::get<std::string>(persona);
        auto it = model.ocean_table().find(speaker);
        if (it == model.ocean_table().end()) throw std::invalid_argument("no OCEAN profile for speaker " + speaker);
        o = it->second;
      }
      auto n = normalize_ocean(o);
      return tape.matvec_transposed(model.params().get(kPersonalityProjection),
                                    tape.constant(std::vector<double>(n.begin(), n.end())));
    }
  }
  return Var{};
}

DecoderState initial_decoder_state(Tape& tape, PersonaModel& model, const EncoderOutput& encoded) {
  return DecoderState{encoded.final_state, tape.zeros(model.config().hidden)};
}

DecodeStep decode_step(Tape& tape, PersonaModel& model, const DecoderState& prev, Var y_prev_embedding,
                       Var persona, const EncoderOutput& encoded, bool training, Rng* rng) {
  const auto& c = model.config();
  if (training && rng == nullptr) throw std::invalid_argument("decode_step: training requires an rng");
  const bool conditioned = c.conditioning != Conditioning::kNone;
  if (conditioned != persona.valid()) {
    throw std::invalid_argument("decode_step: persona vector must be given iff the model is conditioned");
  }
  if (conditioned && tape.value(persona).size() != c.hidden) {
    throw std::invalid_argument("decode_step: persona vector width differs from hidden size");
  }
  if (tape.value(y_prev_embedding).size() != c.hidden || prev.layers.size() != c.layers) {
    throw std::invalid_argument("decode_step: dimension mismatch");
  }
  const double rate = training ? c.dropout : 0.0;

  Var y = rate > 0.0 ? dropout(tape, y_prev_embedding, rate, *rng, true) : y_prev_embedding;
  Var x = conditioned ? tape.concat({y, prev.context, persona}) : tape.concat({y, prev.context});
  DecodeStep out;
  out.state.layers.resize(c.layers);
  for (std::size_t k = 0; k < c.layers; ++k) {
    if (k > 0 && rate > 0.0) x = dropout(tape, x, rate, *rng, true);
    out.state.layers[k] = lstm_cell_step(tape, x, prev.layers[k], model.layer("decoder", k));
    x = out.state.layers[k].h;
  }
  auto att = attention_context(tape, x, encoded.hiddens, encoded.keys);
  out.state.context = att.context;
  Var f = attentional_hidden(tape, att.context, x, model.params().get(kCombine));
  if (rate > 0.0) f = dropout(tape, f, rate, *rng, true);
  out.logits = output_logits(tape, f, model.params().get(kOutput));
  return out;
}

DecodeStep decode_step(Tape& tape, PersonaModel& model, const DecoderState& prev, TokenId y_prev, Var persona,
                       const EncoderOutput& encoded, bool training, Rng* rng) {
  check_token(model, y_prev);
  Var y = tape.row(model.params().get(kTgtEmbedding), static_cast<std::size_t>(y_prev));
  return decode_step(tape, model, prev, y, persona, encoded, training, rng);
}

Var pair_loss(Tape& tape, PersonaModel& model, const ContextResponsePair& pair, bool training, Rng* rng) {
  if (pair.response.empty()) throw std::invalid_argument("pair_loss: empty response");
  auto enc = encode(tape, model, pair.context, training, rng);
  Var pv = persona_vector(tape, model, pair.persona);
  DecoderState state = initial_decoder_state(tape, model, enc);
  TokenId prev = Vocabulary::kStart;
  std::vector<Var> terms;
  terms.reserve(pair.response.size());
  for (TokenId y : pair.response) {
    check_token(model, y);
    auto step = decode_step(tape, model, state, prev, pv, enc, training, rng);
    terms.push_back(tape.nll(step.logits, static_cast<std::size_t>(y)));
    state = std::move(step.state);
    prev = y;
  }
  return tape.sum(terms);
}

double sequence_log_prob(PersonaModel& model, const TokenIds& context, const TokenIds& response,
                         const Persona& persona) {
  return static_cast<double>(score_sequence(model, context, response, persona).log_prob);
}

std::vector<double> step_log_probs(PersonaModel& model, const TokenIds& context, const TokenIds& response,
                                   const Persona& persona) {
  return score_sequence(model, context, response, persona).steps;
}

double perplexity(PersonaModel& model, const std::vector<ContextResponsePair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("perplexity of an empty dataset");
  long double total = 0.0L;
  std::size_t tokens = 0;
  for (const auto& p : pairs) {
    total -= score_sequence(model, p.context, p.response, p.persona).log_prob;
    tokens += p.response.size();
  }
  return static_cast<double>(std::exp(total / static_cast<long double>(tokens)));
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<ContextResponsePair>& pairs,
                                                   std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  // Sort within pools of a few batches so lengths are similar inside a
  // batch while batches still differ between iterations.
  const std::size_t pool = batch_size * 8;
  for (std::size_t start = 0; start < order.size(); start += pool) {
    auto b = order.begin() + static_cast<std::ptrdiff_t>(start);
    auto e = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(b, e, [&](std::size_t x, std::size_t y) {
      return pairs[x].response.size() < pairs[y].response.size();
    });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch_size)));
  }
  rng.shuffle(batches);
  return batches;
}

TrainResult train(PersonaModel& model, const std::vector<ContextResponsePair>& train_pairs,
                  const std::vector<ContextResponsePair>& validation_pairs, const TrainOptions& options, Rng& rng) {
  if (train_pairs.empty() || validation_pairs.empty()) throw std::invalid_argument("train: empty dataset");
  const auto& c = model.config();
  LearningRateSchedule schedule(c.learning_rate, c.halve_after);
  TrainResult result;
  result.initial_validation_perplexity = perplexity(model, validation_pairs);
  Tape tape;
  for (std::size_t it = 1; it <= options.iterations; ++it) {
    const double lr = schedule.rate(it);
    double loss_sum = 0.0;
    std::size_t token_count = 0;
    for (const auto& batch : make_batches(train_pairs, c.batch_size, rng)) {
      model.params().zero_grad();
      const double weight = 1.0 / static_cast<double>(batch.size());
      for (std::size_t idx : batch) {
        tape.clear();
        Var loss = pair_loss(tape, model, train_pairs[idx], true, &rng);
        const double l = tape.scalar(loss);
        if (!std::isfinite(l)) {
          throw TrainingDiverged("non-finite loss at iteration " + std::to_string(it) + " on pair " +
                                 std::to_string(idx));
        }
        loss_sum += l;
        token_count += train_pairs[idx].response.size();
        tape.backward(loss, weight);
      }
      clip_gradients(model.params(), c.clip_threshold);
      sgd_step(model.params(), lr);
    }
    IterationRecord rec{it, lr, loss_sum / static_cast<double>(token_count), perplexity(model, validation_pairs)};
    if (!std::isfinite(rec.validation_perplexity)) {
      throw TrainingDiverged("validation perplexity became non-finite at iteration " + std::to_string(it));
    }
    result.history.push_back(rec);
    if (options.log) {
      *options.log << rec.iteration << '\t' << format_double(rec.learning_rate) << '\t'
                   << format_double(rec.train_loss) << '\t' << format_double(rec.validation_perplexity) << '\n';
    }
    if (!options.checkpoint_prefix.empty()) {
      save_checkpoint_file(model, options.checkpoint_prefix + ".iter" + std::to_string(it) + ".ckpt");
    }
  }
  return result;
}

PersonaModel initialise_from(const PersonaModel& source, Conditioning mode, std::vector<std::string> speakers,
                             std::map<std::string, OceanScores> ocean_table, std::uint64_t seed) {
  ModelConfig cfg = source.config();
  cfg.conditioning = mode;
  // Fresh parameters supply the persona tensors and new columns.
  PersonaModel fresh(cfg, speakers, seed);
  ParameterSet params = fresh.params();
  const std::size_t d = cfg.hidden;
  const std::size_t src_p = source.config().persona_width();
  const std::size_t dst_p = cfg.persona_width();
  const bool same_persona = source.config().conditioning == mode && source.speakers() == speakers;

  for (auto& [name, t] : params.tensors()) {
    if (!source.params().contains(name)) continue;
    const Tensor& s = source.params().get(name);
    const bool persona_param = name == kSpeakerEmbedding || name == kPersonalityProjection;
    if (persona_param && !same_persona) continue;
    if (name == PersonaModel::layer_weight("decoder", 0) && s.shape != t.shape) {
      if (s.rows() != t.rows()) throw std::invalid_argument("initialise_from: incompatible decoder shapes");
      // Columns: [y*(d); c(d); persona(p); h(d)]
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t j = 0; j < 2 * d; ++j) t.at(r, j) = s.at(r, j);
        for (std::size_t j = 0; j < d; ++j) t.at(r, 2 * d + dst_p + j) = s.at(r, 2 * d + src_p + j);
      }
      continue;
    }
    if (s.shape != t.shape) throw std::invalid_argument("initialise_from: incompatible shape for " + name);
    if (same_persona || !persona_param) t.value = s.value;
    if (name == PersonaModel::layer_weight("decoder", 0) && !same_persona && dst_p > 0) {
      // Same width but a different persona: keep shared columns only.
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t j = 0; j < dst_p; ++j) t.at(r, 2 * d + j) = fresh.params().get(name).at(r, 2 * d + j);
      }
    }
  }
  for (auto& [_, t] : params.tensors()) t.zero_grad();
  return PersonaModel(cfg, std::move(speakers), std::move(params), std::move(ocean_table), seed);
}

}  // namespace persona
