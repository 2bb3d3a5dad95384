#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "cmmp/autodiff.hpp"
#include "cmmp/tensor.hpp"

namespace cmmp {

/// A batch of sequences: one [B x features] node per time step.
using Sequence = std::vector<Var>;

struct LinearParams {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  std::size_t in() const { return weight.shape[1]; }
  std::size_t out() const { return weight.shape[0]; }
};

/// Gate blocks along the 4H axis are ordered (input, forget, cell, output).
struct LSTMLayerParams {
  Tensor w_ih;  // [4H x in]
  Tensor w_hh;  // [4H x H]
  Tensor bias;  // [4H]

  std::size_t hidden() const { return w_hh.shape[1]; }
  std::size_t in() const { return w_ih.shape[1]; }
};

/// Two stacked LSTM layers; layer2's hidden size equals the feature size D.
struct MessageGeneratorParams {
  LSTMLayerParams layer1;  // D -> H
  LSTMLayerParams layer2;  // H -> D
};

/// Per-frame encoder: l2(tanh(l1(frame))), weights shared over time.
struct EncoderParams {
  LinearParams l1;  // P -> H_e
  LinearParams l2;  // H_e -> D
};

// Parameter records bound to a tape as differentiable leaves (or constants
// when frozen).
struct LinearVars {
  Var weight, bias;
};
struct LSTMLayerVars {
  Var w_ih, w_hh, bias;
  std::size_t hidden;
};
struct MessageGeneratorVars {
  LSTMLayerVars layer1, layer2;
};
struct EncoderVars {
  LinearVars l1, l2;
};

LinearVars bind(Tape& tape, const LinearParams& p, bool trainable = true);
LSTMLayerVars bind(Tape& tape, const LSTMLayerParams& p, bool trainable = true);
MessageGeneratorVars bind(Tape& tape, const MessageGeneratorParams& p, bool trainable = true);
EncoderVars bind(Tape& tape, const EncoderParams& p, bool trainable = true);

/// x * weight^T + bias, row by row. x is [B x in] or [in].
Var linear_forward(const LinearVars& p, Var x);

struct LSTMState {
  Var h, c;
};

LSTMState lstm_cell_step(const LSTMLayerVars& p, Var x_t, const LSTMState& prev);

/// Runs one LSTM layer over the sequence from a zero state; returns hidden states.
Sequence lstm_layer_forward(const LSTMLayerVars& p, const Sequence& x);

/// Two-layer LSTM; the output (layer2 hidden sequence) is the message.
Sequence lstm2_forward(const MessageGeneratorVars& g, const Sequence& x);
/// Single-sequence form: [T x D] -> [T x D].
Var lstm2_forward(const MessageGeneratorVars& g, Var x);

Sequence mlp_encode_sequence(const EncoderVars& e, const Sequence& raw);
/// Single-sequence form: [T x P] -> [T x D].
Var mlp_encode_sequence(const EncoderVars& e, Var raw);

/// Splits a [T x F] node into T nodes of shape [1 x F].
Sequence split_rows(Var x);
/// Stacks T nodes of shape [B x F] into [(T*B) x F].
Var stack_rows(const Sequence& seq);

// Initialization: weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases
// zero, LSTM forget-gate bias 1.0.
void init_linear(LinearParams& p, std::size_t in, std::size_t out, std::mt19937_64& rng);
void init_lstm_layer(LSTMLayerParams& p, std::size_t in, std::size_t hidden,
                     std::mt19937_64& rng);
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in,
                      std::size_t fan_out, std::mt19937_64& rng);

}  // namespace cmmp
