#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "persona/autodiff.hpp"
#include "persona/corpus.hpp"
#include "persona/layers.hpp"
#include "persona/ocean.hpp"
#include "persona/rng.hpp"
#include "persona/tensor.hpp"

namespace persona {

enum class Conditioning { kNone, kSpeaker, kPersonality };

std::string_view to_string(Conditioning c);
std::optional<Conditioning> parse_conditioning(std::string_view s);

/// Architecture and optimisation settings. Defaults are desk scale; see
/// full_scale() for the full-size values.
struct ModelConfig {
  std::size_t layers = 2;
  std::size_t hidden = 32;            // also the word-embedding width
  std::size_t vocab_size = 0;
  std::size_t max_input_length = 50;
  std::size_t batch_size = 16;
  double dropout = 0.2;
  double learning_rate = 1.0;
  std::size_t halve_after = 6;
  double clip_threshold = 5.0;
  double init_range = 0.1;
  Conditioning conditioning = Conditioning::kNone;

  // 4 x 1024 LSTMs, |V| = 25000, batch 128.
  static ModelConfig full_scale();

  void validate() const;
  std::size_t persona_width() const { return conditioning == Conditioning::kNone ? 0 : hidden; }

  // Space-separated key=value pairs on one line.
  std::string serialize() const;
  static ModelConfig parse(std::string_view line);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Encoder-attention-decoder with optional speaker or personality
/// conditioning of the first decoder layer.
///
/// Parameter names:
///   src_embedding, tgt_embedding          |V| x d
///   encoder.l<k>.weight / .bias           LSTM layers
///   decoder.l<k>.weight / .bias           layer 0 input is [y*; c_{t-1}; v]
///   attention.weight                      d x d bilinear alignment
///   output.combine                        d x 2d, f = tanh(W_c [c_t; h_t])
///   output.weight                         |V| x d
///   speaker_embedding                     speakers x d   (speaker mode)
///   personality_projection                5 x d          (personality mode)
class PersonaModel {
 public:
  PersonaModel(ModelConfig config, std::vector<std::string> speakers, std::uint64_t seed);
  PersonaModel(ModelConfig config, std::vector<std::string> speakers, ParameterSet params,
               std::map<std::string, OceanScores> ocean_table, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  std::optional<std::size_t> speaker_index(const std::string& speaker) const;

  // Speaker -> OCEAN assignment used when training a personality model.
  const std::map<std::string, OceanScores>& ocean_table() const { return ocean_table_; }
  void set_ocean_table(std::map<std::string, OceanScores> table) { ocean_table_ = std::move(table); }

  std::uint64_t seed() const { return seed_; }

  static std::string layer_weight(std::string_view side, std::size_t layer);
  static std::string layer_bias(std::string_view side, std::size_t layer);
  LstmLayerParams layer(std::string_view side, std::size_t k);

 private:
  void check_shapes() const;

  ModelConfig config_;
  std::vector<std::string> speakers_;
  ParameterSet params_;
  std::map<std::string, OceanScores> ocean_table_;
  std::uint64_t seed_ = 0;
};

// (o - 4) / 3 per trait; throws when a component lies outside [1, 7].
std::array<double, kTraitCount> normalize_ocean(const OceanScores& o);

// v_o = W_o^T (o - 4) / 3 with W_o stored as 5 x d.
std::vector<double> personality_embedding(const OceanScores& o, const Tensor& projection);

struct EncoderOutput {
  std::vector<Var> hiddens;                 // top layer, one per context token
  std::vector<Var> keys;                    // W_a * hidden, reused at every step
  std::vector<LstmLayerState> final_state;  // seeds the decoder
};

EncoderOutput encode(Tape& tape, PersonaModel& model, const TokenIds& context, bool training = false,
                     Rng* rng = nullptr);

// Invalid Var in unconditioned mode. In personality mode a speaker id is
// mapped through the model's OCEAN table.
Var persona_vector(Tape& tape, PersonaModel& model, const Persona& persona);

struct DecoderState {
  std::vector<LstmLayerState> layers;
  Var context;  // c_{t-1}
};

DecoderState initial_decoder_state(Tape& tape, PersonaModel& model, const EncoderOutput& encoded);

struct DecodeStep {
  DecoderState state;
  Var logits;
};

DecodeStep decode_step(Tape& tape, PersonaModel& model, const DecoderState& prev, Var y_prev_embedding,
                       Var persona, const EncoderOutput& encoded, bool training = false, Rng* rng = nullptr);
DecodeStep decode_step(Tape& tape, PersonaModel& model, const DecoderState& prev, TokenId y_prev, Var persona,
                       const EncoderOutput& encoded, bool training = false, Rng* rng = nullptr);

// Teacher-forced sum of -log P_t(y_t); response must end with the end token.
Var pair_loss(Tape& tape, PersonaModel& model, const ContextResponsePair& pair, bool training = false,
              Rng* rng = nullptr);

// sum_t log P_t(y_t | y_<t, X)
double sequence_log_prob(PersonaModel& model, const TokenIds& context, const TokenIds& response,
                         const Persona& persona);
std::vector<double> step_log_probs(PersonaModel& model, const TokenIds& context, const TokenIds& response,
                                   const Persona& persona);

// exp(total cross-entropy / total response tokens)
double perplexity(PersonaModel& model, const std::vector<ContextResponsePair>& pairs);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;   // mean per-token cross-entropy
  double validation_perplexity = 0.0;
};

struct TrainOptions {
  std::size_t iterations = 1;
  std::string checkpoint_prefix;     // "<prefix>.iter<k>.ckpt" when non-empty
  std::ostream* log = nullptr;       // iteration<TAB>lr<TAB>train_loss<TAB>val_ppl
};

struct TrainResult {
  double initial_validation_perplexity = 0.0;
  std::vector<IterationRecord> history;
};

// Batches of similar response length, teacher-forced loss, global-norm
// clipping and plain SGD with the halving schedule.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<ContextResponsePair>& pairs,
                                                   std::size_t batch_size, Rng& rng);
TrainResult train(PersonaModel& model, const std::vector<ContextResponsePair>& train_pairs,
                  const std::vector<ContextResponsePair>& validation_pairs, const TrainOptions& options, Rng& rng);

// Copies every shared parameter from `source`; persona parameters and the
// persona columns of the first decoder layer are drawn fresh.
PersonaModel initialise_from(const PersonaModel& source, Conditioning mode, std::vector<std::string> speakers,
                             std::map<std::string, OceanScores> ocean_table, std::uint64_t seed);

}  // namespace persona
