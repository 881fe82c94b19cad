#include "persona/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace persona {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax of empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (out[i] = std::exp(logits[i] - mx));
  for (double& v : out) v /= z;
  return out;
}

std::vector<long double> log_softmax_extended(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax of empty vector");
  const long double mx = *std::max_element(logits.begin(), logits.end());
  long double z = 0.0L;
  for (double l : logits) z += std::exp(static_cast<long double>(l) - mx);
  const long double lz = std::log(z) + mx;
  std::vector<long double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<long double>(logits[i]) - lz;
  return out;
}

LstmLayerState lstm_cell_step(Tape& tape, Var x, const LstmLayerState& prev, const LstmLayerParams& params) {
  const std::size_t d = params.hidden();
  if (tape.value(x).size() != params.input_width() || tape.value(prev.h).size() != d ||
      tape.value(prev.m).size() != d) {
    throw std::invalid_argument("lstm_cell_step: dimension mismatch");
  }
  Var gates = tape.add(tape.matvec(*params.weight, tape.concat({x, prev.h})), tape.vector_param(*params.bias));
  Var i = tape.sigmoid(tape.slice(gates, 0, d));
  Var f = tape.sigmoid(tape.slice(gates, d, d));
  Var o = tape.sigmoid(tape.slice(gates, 2 * d, d));
  Var g = tape.tanh(tape.slice(gates, 3 * d, d));
  Var m = tape.add(tape.mul(f, prev.m), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(m));
  return {h, m};
}

std::vector<Var> attention_keys(Tape& tape, Tensor& w_a, const std::vector<Var>& encoder_hiddens) {
  std::vector<Var> keys;
  keys.reserve(encoder_hiddens.size());
  for (Var e : encoder_hiddens) keys.push_back(tape.matvec(w_a, e));
  return keys;
}

AttentionResult attention_context(Tape& tape, Var decoder_hidden, const std::vector<Var>& encoder_hiddens,
                                  const std::vector<Var>& keys) {
  if (encoder_hiddens.empty()) throw std::invalid_argument("attention over an empty encoder sequence");
  if (keys.size() != encoder_hiddens.size()) throw std::invalid_argument("attention: key count mismatch");
  std::vector<Var> scores;
  scores.reserve(keys.size());
  for (Var k : keys) scores.push_back(tape.dot(decoder_hidden, k));
  Var weights = tape.softmax(tape.concat(scores));
  return {tape.weighted_sum(weights, encoder_hiddens), weights};
}

AttentionResult attention_context(Tape& tape, Var decoder_hidden, const std::vector<Var>& encoder_hiddens,
                                  Tensor& w_a) {
  return attention_context(tape, decoder_hidden, encoder_hiddens, attention_keys(tape, w_a, encoder_hiddens));
}

Var attentional_hidden(Tape& tape, Var context, Var hidden, Tensor& w_combine) {
  return tape.tanh(tape.matvec(w_combine, tape.concat({context, hidden})));
}

Var output_logits(Tape& tape, Var attentional, Tensor& w_out) { return tape.matvec(w_out, attentional); }

Var output_distribution(Tape& tape, Var context, Var hidden, Tensor& w_combine, Tensor& w_out) {
  return tape.softmax(output_logits(tape, attentional_hidden(tape, context, hidden, w_combine), w_out));
}

Var cross_entropy_loss(Tape& tape, const std::vector<Var>& logits, std::span<const std::size_t> targets) {
  if (logits.size() != targets.size()) throw std::invalid_argument("cross_entropy_loss: length mismatch");
  std::vector<Var> terms;
  terms.reserve(logits.size());
  for (std::size_t t = 0; t < logits.size(); ++t) terms.push_back(tape.nll(logits[t], targets[t]));
  return tape.sum(terms);
}

Var dropout(Tape& tape, Var x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> m(tape.value(x).size());
  for (double& v : m) v = rng.bernoulli(rate) ? 0.0 : keep_scale;
  return tape.mask(x, std::move(m));
}

}  // namespace persona
