#include "cmmp/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "cmmp/errors.hpp"
#include "cmmp/evaluate.hpp"
#include "cmmp/seed.hpp"

namespace cmmp {

std::string_view to_string(Stage stage) {
  return stage == Stage::pretrain ? "pretrain" : "finetune";
}

TrainConfig TrainConfig::full_scale() {
  TrainConfig cfg;
  cfg.batch_size = 64;
  cfg.decay_every = 4500;
  cfg.pretrain_iters = 13500;
  cfg.finetune_iters = 13500;
  cfg.total_iters = 27000;
  return cfg;
}

void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw ConfigError("config: batch_size must be positive");
  if (!(c.lr_pretrain > 0.0) || !(c.lr_finetune > 0.0)) throw ConfigError("config: learning rates must be positive");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("config: momentum must be in [0, 1)");
  if (!(c.decay_factor > 0.0 && c.decay_factor < 1.0)) throw ConfigError("config: decay_factor must be in (0, 1)");
  if (c.decay_every == 0) throw ConfigError("config: decay_every must be positive");
  if (c.pretrain_iters + c.finetune_iters != c.total_iters) {
    throw ConfigError("config: pretrain_iters + finetune_iters must equal total_iters");
  }
  if (c.segments == 0 || c.window == 0) throw ConfigError("config: segments and window must be positive");
  if (c.encoder_hidden == 0 || c.feature_dim == 0 || c.message_hidden == 0) {
    throw ConfigError("config: model sizes must be positive");
  }
  validate_score_weights(c.score_weights);
}

ModelDims model_dims(const Dataset& ds, const TrainConfig& cfg) {
  ModelDims d;
  d.appearance_dim = ds.appearance_dim;
  d.motion_dim = ds.motion_dim * cfg.window;
  d.encoder_hidden = cfg.encoder_hidden;
  d.feature_dim = cfg.feature_dim;
  d.message_hidden = cfg.message_hidden;
  d.classes = ds.classes;
  return d;
}

double lr_schedule(Stage stage, std::size_t iter, const TrainConfig& cfg) {
  const double base = stage == Stage::pretrain ? cfg.lr_pretrain : cfg.lr_finetune;
  const auto decays = static_cast<double>(iter / cfg.decay_every);
  return base * std::pow(cfg.decay_factor, decays);
}

OptimizerState make_optimizer_state(const CMMPModel& model) {
  OptimizerState s;
  for_each_parameter(model, [&](const std::string&, const Tensor& t) {
    s.velocity.emplace_back(t.shape, 0.0);
  });
  return s;
}

void sgd_momentum_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                       std::span<Tensor> velocity, double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("sgd: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " + std::to_string(velocity.size()) +
                     " velocities");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p];
    const Tensor& g = grads[p];
    Tensor& v = velocity[p];
    if (theta.shape != g.shape || theta.shape != v.shape) {
      throw ShapeError("sgd: shape mismatch " + to_string(theta.shape) + " / " + to_string(g.shape) +
                       " / " + to_string(v.shape));
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v.data[i] = momentum * v.data[i] - lr * g.data[i];
      theta.data[i] += v.data[i];
    }
  }
}

std::vector<std::size_t> batch_indices(std::size_t n_samples, std::size_t batch_size,
                                       std::uint64_t seed, Stage stage, std::size_t iter) {
  if (n_samples == 0) throw ConfigError("training: empty dataset");
  const std::size_t per_epoch = (n_samples + batch_size - 1) / batch_size;
  const std::size_t epoch = iter / per_epoch;
  const std::size_t slot = iter % per_epoch;
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, {3, static_cast<std::uint64_t>(stage), epoch}));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t begin = slot * batch_size;
  const std::size_t end = std::min(n_samples, begin + batch_size);
  return {order.begin() + static_cast<std::ptrdiff_t>(begin),
          order.begin() + static_cast<std::ptrdiff_t>(end)};
}

LossBundle train_step(TrainState& state, const Batch& batch, const TrainConfig& cfg) {
  const bool finetune = state.stage == Stage::finetune;
  Tape tape;
  const ModelVars vars = bind(tape, state.model, {.train_streams = true, .train_generators = finetune});
  Sequence raw_a, raw_m;
  for (const auto& t : batch.appearance) raw_a.push_back(tape.constant(t));
  for (const auto& t : batch.motion) raw_m.push_back(tape.constant(t));

  const FusionMode mode = finetune ? cfg.fusion_mode : FusionMode::none;
  const StreamOutputs out = forward_full(vars, mode, state.model.score_weights, raw_a, raw_m);
  Var l_a = cross_entropy(out.s_a, batch.labels);
  Var l_m = cross_entropy(out.s_m, batch.labels);
  auto [al_a, al_m] = adversarial_losses(l_a, l_m, cfg.adversarial_detach);
  Var total = finetune && cfg.adversarial ? ad::add(al_a, al_m) : ad::add(l_a, l_m);
  tape.backward(total);

  std::vector<Var> handles;
  for_each_parameter(vars, [&](const std::string&, const Var& v) { handles.push_back(v); });
  std::vector<Tensor*> params;
  for_each_parameter(state.model, [&](const std::string&, Tensor& t) { params.push_back(&t); });

  std::vector<Tensor*> live_params;
  std::vector<Tensor> grads;
  std::vector<Tensor> velocity;
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < handles.size(); ++i) {
    if (tape.op(handles[i]) != OpTag::leaf) continue;
    live.push_back(i);
    live_params.push_back(params[i]);
    grads.push_back(tape.grad(handles[i]));
    velocity.push_back(std::move(state.optimizer.velocity[i]));
  }
  const double lr = lr_schedule(state.stage, state.iteration, cfg);
  sgd_momentum_step(live_params, grads, velocity, lr, cfg.momentum);
  for (std::size_t k = 0; k < live.size(); ++k) state.optimizer.velocity[live[k]] = std::move(velocity[k]);
  ++state.iteration;

  return {l_a.value().item(), l_m.value().item(), al_a.value().item(), al_m.value().item()};
}

void run_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
               std::size_t stop_iter, const MetricsSink& sink) {
  if (ds.train.empty()) throw ConfigError("training: empty dataset");
  const bool finetune = state.stage == Stage::finetune;
  const std::size_t stage_len = finetune ? cfg.finetune_iters : cfg.pretrain_iters;
  const std::size_t offset = finetune ? cfg.pretrain_iters : 0;
  const FusionMode eval_mode = finetune ? cfg.fusion_mode : FusionMode::none;
  const auto stage_tag = static_cast<std::uint64_t>(state.stage);

  LossBundle& acc = state.window;
  std::size_t& count = state.window_count;
  auto started = std::chrono::steady_clock::now();
  while (state.iteration < stop_iter) {
    const auto idx = batch_indices(ds.train.size(), cfg.batch_size, cfg.seed, state.stage, state.iteration);
    const Batch batch = make_batch(ds.train, idx, cfg.segments, cfg.window, SamplingMode::train,
                                   derive_seed(cfg.seed, {2, stage_tag, state.iteration}));
    const LossBundle lb = train_step(state, batch, cfg);
    acc.L_a += lb.L_a;
    acc.L_m += lb.L_m;
    acc.AL_a += lb.AL_a;
    acc.AL_m += lb.AL_m;
    ++count;

    const std::size_t k = state.iteration;
    const bool due = (cfg.eval_every > 0 && k % cfg.eval_every == 0) || k == stage_len;
    if (!due) continue;
    if (sink) {
      const Accuracy a = evaluate(state.model, eval_mode, ds.test, cfg.segments, cfg.window);
      const double n = static_cast<double>(count);
      MetricsRecord r;
      r.stage = std::string(to_string(state.stage));
      r.iteration = offset + k;
      r.L_a = acc.L_a / n;
      r.L_m = acc.L_m / n;
      r.AL_a = acc.AL_a / n;
      r.AL_m = acc.AL_m / n;
      r.acc_spatial = a.spatial();
      r.acc_temporal = a.temporal();
      r.acc_fused = a.fused();
      const auto now = std::chrono::steady_clock::now();
      r.wall_ms = std::chrono::duration<double, std::milli>(now - started).count();
      sink(r);
    }
    acc = {};
    count = 0;
    started = std::chrono::steady_clock::now();
  }
}

void pretrain_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
                    const MetricsSink& sink) {
  if (state.stage != Stage::pretrain) throw ConfigError("pretrain_stage: state is past pretraining");
  run_stage(state, ds, cfg, cfg.pretrain_iters, sink);
}

void finetune_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
                    const MetricsSink& sink) {
  if (state.stage != Stage::finetune) begin_finetune(state);
  run_stage(state, ds, cfg, cfg.finetune_iters, sink);
}

void begin_finetune(TrainState& state) {
  state.stage = Stage::finetune;
  state.iteration = 0;
  state.window = {};
  state.window_count = 0;
  state.optimizer = make_optimizer_state(state.model);
}

TrainState initial_state(const Dataset& ds, const TrainConfig& cfg) {
  TrainState s;
  s.model = init_params(cfg.seed, model_dims(ds, cfg));
  s.model.fusion_mode = cfg.fusion_mode;
  s.model.score_weights = cfg.score_weights;
  s.optimizer = make_optimizer_state(s.model);
  return s;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  TrainResult result{initial_state(ds, cfg), {}};
  const MetricsSink sink = [&](const MetricsRecord& r) { result.history.push_back(r); };
  pretrain_stage(result.state, ds, cfg, sink);
  if (cfg.finetune_iters > 0) finetune_stage(result.state, ds, cfg, sink);
  return result;
}

}  // namespace cmmp
