#include "cmmp/layers.hpp"

#include <cmath>

#include "cmmp/errors.hpp"

namespace cmmp {
namespace {

Var param(Tape& tape, const Tensor& t, bool trainable) {
  return trainable ? tape.leaf(t) : tape.constant(t);
}

}  // namespace

LinearVars bind(Tape& tape, const LinearParams& p, bool trainable) {
  return {param(tape, p.weight, trainable), param(tape, p.bias, trainable)};
}

LSTMLayerVars bind(Tape& tape, const LSTMLayerParams& p, bool trainable) {
  if (p.w_ih.shape[0] != 4 * p.hidden() || p.bias.size() != 4 * p.hidden()) {
    throw ShapeError("lstm: gate blocks " + to_string(p.w_ih.shape) + " / " +
                     to_string(p.bias.shape) + " do not match hidden " +
                     std::to_string(p.hidden()));
  }
  return {param(tape, p.w_ih, trainable), param(tape, p.w_hh, trainable),
          param(tape, p.bias, trainable), p.hidden()};
}

MessageGeneratorVars bind(Tape& tape, const MessageGeneratorParams& p, bool trainable) {
  return {bind(tape, p.layer1, trainable), bind(tape, p.layer2, trainable)};
}

EncoderVars bind(Tape& tape, const EncoderParams& p, bool trainable) {
  return {bind(tape, p.l1, trainable), bind(tape, p.l2, trainable)};
}

Var linear_forward(const LinearVars& p, Var x) {
  if (x.shape().size() == 1) {
    Var row = ad::reshape(x, {1, x.shape()[0]});
    Var y = ad::add(ad::matmul_nt(row, p.weight), p.bias);
    return ad::reshape(y, {p.weight.shape()[0]});
  }
  return ad::add(ad::matmul_nt(x, p.weight), p.bias);
}

LSTMState lstm_cell_step(const LSTMLayerVars& p, Var x_t, const LSTMState& prev) {
  const std::size_t h = p.hidden;
  Var gates = ad::add(ad::add(ad::matmul_nt(x_t, p.w_ih), ad::matmul_nt(prev.h, p.w_hh)), p.bias);
  Var i = ad::sigmoid(ad::slice_last(gates, 0, h));
  Var f = ad::sigmoid(ad::slice_last(gates, h, h));
  Var g = ad::tanh(ad::slice_last(gates, 2 * h, h));
  Var o = ad::sigmoid(ad::slice_last(gates, 3 * h, h));
  Var c = ad::add(ad::mul(f, prev.c), ad::mul(i, g));
  return {ad::mul(o, ad::tanh(c)), c};
}

Sequence lstm_layer_forward(const LSTMLayerVars& p, const Sequence& x) {
  if (x.empty()) throw ShapeError("lstm: empty sequence");
  Tape& tape = *x.front().tape;
  const std::size_t batch = x.front().shape()[0];
  LSTMState state{tape.constant(Tensor({batch, p.hidden})),
                  tape.constant(Tensor({batch, p.hidden}))};
  Sequence out;
  out.reserve(x.size());
  for (Var x_t : x) {
    state = lstm_cell_step(p, x_t, state);
    out.push_back(state.h);
  }
  return out;
}

Sequence lstm2_forward(const MessageGeneratorVars& g, const Sequence& x) {
  return lstm_layer_forward(g.layer2, lstm_layer_forward(g.layer1, x));
}

Var lstm2_forward(const MessageGeneratorVars& g, Var x) {
  return stack_rows(lstm2_forward(g, split_rows(x)));
}

Sequence mlp_encode_sequence(const EncoderVars& e, const Sequence& raw) {
  Sequence out;
  out.reserve(raw.size());
  for (Var frame : raw) out.push_back(linear_forward(e.l2, ad::tanh(linear_forward(e.l1, frame))));
  return out;
}

Var mlp_encode_sequence(const EncoderVars& e, Var raw) {
  if (raw.shape().size() != 2) throw ShapeError("encoder: expected [T x P], got " + to_string(raw.shape()));
  return linear_forward(e.l2, ad::tanh(linear_forward(e.l1, raw)));
}

Sequence split_rows(Var x) {
  if (x.shape().size() != 2) throw ShapeError("split_rows: expected rank 2, got " + to_string(x.shape()));
  Sequence out;
  for (std::size_t t = 0; t < x.shape()[0]; ++t) {
    const std::size_t row[1] = {t};
    out.push_back(ad::gather_rows(x, row));
  }
  return out;
}

Var stack_rows(const Sequence& seq) { return ad::concat(seq, 0); }

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in,
                      std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w({rows, cols});
  for (auto& v : w.data) v = dist(rng);
  return w;
}

void init_linear(LinearParams& p, std::size_t in, std::size_t out, std::mt19937_64& rng) {
  if (in == 0 || out == 0) throw ConfigError("linear: dimensions must be positive");
  p.weight = glorot_uniform(out, in, in, out, rng);
  p.bias = Tensor({out});
}

void init_lstm_layer(LSTMLayerParams& p, std::size_t in, std::size_t hidden,
                     std::mt19937_64& rng) {
  if (in == 0 || hidden == 0) throw ConfigError("lstm: dimensions must be positive");
  p.w_ih = glorot_uniform(4 * hidden, in, in, 4 * hidden, rng);
  p.w_hh = glorot_uniform(4 * hidden, hidden, hidden, 4 * hidden, rng);
  p.bias = Tensor({4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias.data[j] = 1.0;
}

}  // namespace cmmp
