#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmmp/layers.hpp"

namespace cmmp {

enum class FusionMode { cmmp, sum, max, none };

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view text);

struct ModelDims {
  std::size_t appearance_dim = 24;  // P_a, one appearance frame
  std::size_t motion_dim = 60;      // L * P_m, one stacked motion window
  std::size_t encoder_hidden = 32;  // H_e
  std::size_t feature_dim = 8;      // D
  std::size_t message_hidden = 64;  // H, first LSTM layer
  std::size_t classes = 12;         // C

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct CMMPModel {
  ModelDims dims;
  EncoderParams enc_a, enc_m;
  MessageGeneratorParams gen_a;  // consumes x_a, emits m_a
  MessageGeneratorParams gen_m;  // consumes x_m, emits m_m
  LinearParams head_a, head_m;
  FusionMode fusion_mode = FusionMode::cmmp;
  std::array<double, 2> score_weights{0.5, 0.5};
};

/// Deterministic initialization from a 64-bit seed.
CMMPModel init_params(std::uint64_t seed, const ModelDims& dims);

/// Throws ConfigError unless score weights are non-negative and sum to 1.
void validate_score_weights(const std::array<double, 2>& w);

/// The model's parameters bound to one tape.
struct ModelVars {
  EncoderVars enc_a, enc_m;
  MessageGeneratorVars gen_a, gen_m;
  LinearVars head_a, head_m;
};

struct BindOptions {
  bool train_streams = true;     // encoders and heads
  bool train_generators = true;  // message generators
};

ModelVars bind(Tape& tape, const CMMPModel& model, BindOptions opts = {});

/// Visits every parameter in a fixed traversal order as f(name, tensor-or-var).
/// Works on CMMPModel (tensors) and ModelVars (tape handles) alike.
template <class Model, class F>
void for_each_parameter(Model& m, F&& f) {
  auto linear = [&](auto& p, const std::string& name) {
    f(name + ".weight", p.weight);
    f(name + ".bias", p.bias);
  };
  auto lstm = [&](auto& p, const std::string& name) {
    f(name + ".w_ih", p.w_ih);
    f(name + ".w_hh", p.w_hh);
    f(name + ".bias", p.bias);
  };
  linear(m.enc_a.l1, "enc_a.l1");
  linear(m.enc_a.l2, "enc_a.l2");
  linear(m.enc_m.l1, "enc_m.l1");
  linear(m.enc_m.l2, "enc_m.l2");
  lstm(m.gen_a.layer1, "gen_a.layer1");
  lstm(m.gen_a.layer2, "gen_a.layer2");
  lstm(m.gen_m.layer1, "gen_m.layer1");
  lstm(m.gen_m.layer2, "gen_m.layer2");
  linear(m.head_a, "head_a");
  linear(m.head_m, "head_m");
}

bool is_generator_parameter(std::string_view name);

struct StreamOutputs {
  Sequence x_a, x_m;
  Sequence m_a, m_m;  // empty unless fusion mode is cmmp
  Sequence x_a_f, x_m_f;
  Var s_a, s_m;        // logits, [B x C]
  Tensor fused_probs;  // [B x C]
};

/// m_a = lstm2(x_a; w_a), m_m = lstm2(x_m; w_m). Throws ModeError unless mode is cmmp.
std::pair<Sequence, Sequence> generate_messages(const ModelVars& vars, FusionMode mode,
                                                const Sequence& x_a, const Sequence& x_m);

/// cmmp: (x + m) / 2; sum: x + m; max: elementwise max; none: x.
Var fuse_features(Var x, Var m, FusionMode mode);

/// Temporal mean of the fused features followed by the linear head.
Var stream_scores(const LinearVars& head, const Sequence& x_f);
/// Single-sequence form: [T x D] -> [C].
Var stream_scores(const LinearVars& head, Var x_f);

/// Full two-stream pass over a batch. raw_a[t] is [B x P_a], raw_m[t] is [B x L*P_m].
StreamOutputs forward_full(const ModelVars& vars, FusionMode mode,
                           const std::array<double, 2>& score_weights, const Sequence& raw_a,
                           const Sequence& raw_m);

/// Row-wise softmax with max shift.
Tensor softmax_rows(const Tensor& logits);

/// Weighted sum of the two streams' softmax probabilities, row by row.
Tensor fuse_scores(const Tensor& s_a, const Tensor& s_m, const std::array<double, 2>& weights);

/// Argmax with ties broken toward the lowest index.
std::size_t predict(std::span<const double> probs);

}  // namespace cmmp
