#pragma once

#include <span>
#include <vector>

#include "persona/autodiff.hpp"
#include "persona/rng.hpp"
#include "persona/tensor.hpp"

namespace persona {

// Max-subtracted softmax on plain values.
std::vector<double> softmax(std::span<const double> logits);

// log-softmax evaluated in extended precision; used for perplexity.
std::vector<long double> log_softmax_extended(std::span<const double> logits);

/// One LSTM layer. `weight` is (4*hidden) x (input + hidden), its columns
/// ordered [input; previous hidden]; gate rows are ordered input, forget,
/// output, candidate.
struct LstmLayerParams {
  Tensor* weight = nullptr;
  Tensor* bias = nullptr;

  std::size_t hidden() const { return bias->size() / 4; }
  std::size_t input_width() const { return weight->cols() - hidden(); }
};

struct LstmLayerState {
  Var h;
  Var m;  // cell memory
};

LstmLayerState lstm_cell_step(Tape& tape, Var x, const LstmLayerState& prev, const LstmLayerParams& params);

struct AttentionResult {
  Var context;
  Var weights;
};

// Bilinear alignment: score_i = decoder_hidden . (W_a * encoder_hidden_i).
// The projected encoder states do not depend on the decoder step, so they
// can be computed once per sequence.
std::vector<Var> attention_keys(Tape& tape, Tensor& w_a, const std::vector<Var>& encoder_hiddens);
AttentionResult attention_context(Tape& tape, Var decoder_hidden, const std::vector<Var>& encoder_hiddens,
                                  const std::vector<Var>& keys);
AttentionResult attention_context(Tape& tape, Var decoder_hidden, const std::vector<Var>& encoder_hiddens,
                                  Tensor& w_a);

// f(c_t, h_t) = tanh(W_c [c_t; h_t]); logits = W * f.
Var attentional_hidden(Tape& tape, Var context, Var hidden, Tensor& w_combine);
Var output_logits(Tape& tape, Var attentional, Tensor& w_out);
Var output_distribution(Tape& tape, Var context, Var hidden, Tensor& w_combine, Tensor& w_out);

// -sum_t log P_t(y_t), one logits vector per step.
Var cross_entropy_loss(Tape& tape, const std::vector<Var>& logits, std::span<const std::size_t> targets);

// Inverted dropout; identity at inference or when rate is 0.
Var dropout(Tape& tape, Var x, double rate, Rng& rng, bool training);

}  // namespace persona
