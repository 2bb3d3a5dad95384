#include "cmmp/model.hpp"

#include <algorithm>
#include <cmath>

#include "cmmp/errors.hpp"

namespace cmmp {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::cmmp: return "cmmp";
    case FusionMode::sum: return "sum";
    case FusionMode::max: return "max";
    case FusionMode::none: return "none";
  }
  return "none";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "cmmp") return FusionMode::cmmp;
  if (text == "sum") return FusionMode::sum;
  if (text == "max") return FusionMode::max;
  if (text == "none") return FusionMode::none;
  throw ConfigError("unknown fusion mode '" + std::string(text) + "'");
}

CMMPModel init_params(std::uint64_t seed, const ModelDims& d) {
  if (d.appearance_dim == 0 || d.motion_dim == 0 || d.encoder_hidden == 0 ||
      d.feature_dim == 0 || d.message_hidden == 0 || d.classes == 0) {
    throw ConfigError("init_params: all model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  CMMPModel m;
  m.dims = d;
  init_linear(m.enc_a.l1, d.appearance_dim, d.encoder_hidden, rng);
  init_linear(m.enc_a.l2, d.encoder_hidden, d.feature_dim, rng);
  init_linear(m.enc_m.l1, d.motion_dim, d.encoder_hidden, rng);
  init_linear(m.enc_m.l2, d.encoder_hidden, d.feature_dim, rng);
  init_lstm_layer(m.gen_a.layer1, d.feature_dim, d.message_hidden, rng);
  init_lstm_layer(m.gen_a.layer2, d.message_hidden, d.feature_dim, rng);
  init_lstm_layer(m.gen_m.layer1, d.feature_dim, d.message_hidden, rng);
  init_lstm_layer(m.gen_m.layer2, d.message_hidden, d.feature_dim, rng);
  init_linear(m.head_a, d.feature_dim, d.classes, rng);
  init_linear(m.head_m, d.feature_dim, d.classes, rng);
  return m;
}

void validate_score_weights(const std::array<double, 2>& w) {
  if (w[0] < 0.0 || w[1] < 0.0 || std::abs(w[0] + w[1] - 1.0) > 1e-12) {
    throw ConfigError("score weights must be non-negative and sum to 1");
  }
}

ModelVars bind(Tape& tape, const CMMPModel& model, BindOptions opts) {
  ModelVars v;
  v.enc_a = bind(tape, model.enc_a, opts.train_streams);
  v.enc_m = bind(tape, model.enc_m, opts.train_streams);
  v.gen_a = bind(tape, model.gen_a, opts.train_generators);
  v.gen_m = bind(tape, model.gen_m, opts.train_generators);
  v.head_a = bind(tape, model.head_a, opts.train_streams);
  v.head_m = bind(tape, model.head_m, opts.train_streams);
  return v;
}

bool is_generator_parameter(std::string_view name) { return name.starts_with("gen_"); }

std::pair<Sequence, Sequence> generate_messages(const ModelVars& vars, FusionMode mode,
                                                const Sequence& x_a, const Sequence& x_m) {
  if (mode != FusionMode::cmmp) {
    throw ModeError("mode error: message generation requires fusion mode cmmp, got " +
                    std::string(to_string(mode)));
  }
  return {lstm2_forward(vars.gen_a, x_a), lstm2_forward(vars.gen_m, x_m)};
}

Var fuse_features(Var x, Var m, FusionMode mode) {
  if (x.shape() != m.shape()) {
    throw ShapeError("shape error in fuse_features: " + to_string(x.shape()) + " vs " +
                     to_string(m.shape()));
  }
  switch (mode) {
    case FusionMode::cmmp: return ad::scale(ad::add(x, m), 0.5);
    case FusionMode::sum: return ad::add(x, m);
    case FusionMode::max: return ad::maximum(x, m);
    case FusionMode::none: return x;
  }
  return x;
}

Var stream_scores(const LinearVars& head, const Sequence& x_f) {
  if (x_f.empty()) throw ShapeError("stream_scores: empty sequence");
  const Shape frame = x_f.front().shape();
  if (frame.size() != 2) throw ShapeError("stream_scores: expected [B x D] frames, got " + to_string(frame));
  Sequence rows;
  rows.reserve(x_f.size());
  for (Var v : x_f) {
    if (v.shape() != frame) throw ShapeError("stream_scores: ragged frames " + to_string(frame) + " vs " + to_string(v.shape()));
    rows.push_back(ad::reshape(v, {1, frame[0] * frame[1]}));
  }
  Var pooled = ad::reshape(ad::mean(ad::concat(rows, 0), 0), frame);
  return linear_forward(head, pooled);
}

Var stream_scores(const LinearVars& head, Var x_f) {
  if (x_f.shape().size() != 2) throw ShapeError("stream_scores: expected [T x D], got " + to_string(x_f.shape()));
  return linear_forward(head, ad::mean(x_f, 0));
}

StreamOutputs forward_full(const ModelVars& vars, FusionMode mode,
                           const std::array<double, 2>& score_weights, const Sequence& raw_a,
                           const Sequence& raw_m) {
  if (raw_a.size() != raw_m.size() || raw_a.empty()) {
    throw ShapeError("forward_full: appearance has " + std::to_string(raw_a.size()) +
                     " steps, motion has " + std::to_string(raw_m.size()));
  }
  validate_score_weights(score_weights);
  StreamOutputs out;
  out.x_a = mlp_encode_sequence(vars.enc_a, raw_a);
  out.x_m = mlp_encode_sequence(vars.enc_m, raw_m);
  const std::size_t steps = raw_a.size();
  out.x_a_f.reserve(steps);
  out.x_m_f.reserve(steps);
  if (mode == FusionMode::cmmp) {
    std::tie(out.m_a, out.m_m) = generate_messages(vars, mode, out.x_a, out.x_m);
    for (std::size_t t = 0; t < steps; ++t) {
      out.x_a_f.push_back(fuse_features(out.x_a[t], out.m_m[t], mode));
      out.x_m_f.push_back(fuse_features(out.x_m[t], out.m_a[t], mode));
    }
  } else {
    for (std::size_t t = 0; t < steps; ++t) {
      out.x_a_f.push_back(fuse_features(out.x_a[t], out.x_m[t], mode));
      out.x_m_f.push_back(fuse_features(out.x_m[t], out.x_a[t], mode));
    }
  }
  out.s_a = stream_scores(vars.head_a, out.x_a_f);
  out.s_m = stream_scores(vars.head_m, out.x_m_f);
  out.fused_probs = fuse_scores(out.s_a.value(), out.s_m.value(), score_weights);
  return out;
}

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t n = logits.cols();
  const std::size_t m = logits.size() / n;
  Tensor p(logits.shape);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = logits.data.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      p.data[i * n + j] = std::exp(row[j] - mx);
      z += p.data[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) p.data[i * n + j] /= z;
  }
  return p;
}

Tensor fuse_scores(const Tensor& s_a, const Tensor& s_m, const std::array<double, 2>& weights) {
  if (s_a.shape != s_m.shape) {
    throw ShapeError("fuse_scores: " + to_string(s_a.shape) + " vs " + to_string(s_m.shape));
  }
  Tensor p_a = softmax_rows(s_a);
  const Tensor p_m = softmax_rows(s_m);
  for (std::size_t i = 0; i < p_a.size(); ++i) {
    p_a.data[i] = weights[0] * p_a.data[i] + weights[1] * p_m.data[i];
  }
  return p_a;
}

std::size_t predict(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  return best;
}

}  // namespace cmmp
