#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cmmp/metrics.hpp"
#include "cmmp/model.hpp"
#include "cmmp/objectives.hpp"
#include "cmmp/synthdata.hpp"

namespace cmmp {

enum class Stage { pretrain, finetune };

std::string_view to_string(Stage stage);

/// Two-stage training hyperparameters. Defaults are desk-scale; see full_scale().
struct TrainConfig {
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double lr_pretrain = 0.001;
  double lr_finetune = 0.0001;
  std::size_t decay_every = 1500;
  double decay_factor = 0.1;
  std::size_t pretrain_iters = 2000;
  std::size_t finetune_iters = 2000;
  std::size_t total_iters = 4000;
  std::uint64_t seed = 1;
  FusionMode fusion_mode = FusionMode::cmmp;
  bool adversarial = true;
  bool adversarial_detach = true;
  std::size_t eval_every = 500;

  // Sampling and model sizes.
  std::size_t segments = 8;  // T
  std::size_t window = 5;    // L
  std::size_t encoder_hidden = 32;
  std::size_t feature_dim = 8;
  std::size_t message_hidden = 64;
  std::array<double, 2> score_weights{0.5, 0.5};

  /// Batch 64, 13500 iterations, decay every 4500.
  static TrainConfig full_scale();
};

/// Throws ConfigError when an invariant of the config is violated.
void validate(const TrainConfig& cfg);

ModelDims model_dims(const Dataset& ds, const TrainConfig& cfg);

/// base_lr(stage) * decay_factor ^ floor(iter / decay_every).
double lr_schedule(Stage stage, std::size_t iter, const TrainConfig& cfg);

struct OptimizerState {
  std::vector<Tensor> velocity;  // one per parameter, in traversal order
};

OptimizerState make_optimizer_state(const CMMPModel& model);

/// v <- momentum * v - lr * g; theta <- theta + v.
void sgd_momentum_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                       std::span<Tensor> velocity, double lr, double momentum);

/// Sample indices for one iteration: each epoch is a seeded shuffle, the last
/// partial batch is kept.
std::vector<std::size_t> batch_indices(std::size_t n_samples, std::size_t batch_size,
                                       std::uint64_t seed, Stage stage, std::size_t iter);

struct TrainState {
  CMMPModel model;
  OptimizerState optimizer;
  Stage stage = Stage::pretrain;
  std::size_t iteration = 0;  // completed iterations within the stage
  LossBundle window;          // loss sums since the last metrics record
  std::size_t window_count = 0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// One optimizer step on one batch. Returns the batch's loss values.
LossBundle train_step(TrainState& state, const Batch& batch, const TrainConfig& cfg);

/// Advances the current stage until `stop_iter` completed iterations.
/// Records are emitted every eval_every iterations and at the stage end.
void run_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
               std::size_t stop_iter, const MetricsSink& sink = {});

/// Encoders and heads only, cross-entropy per stream; generators stay bit-identical.
void pretrain_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
                    const MetricsSink& sink = {});

/// All parameters jointly under the adversarial (or plain CE) objective.
void finetune_stage(TrainState& state, const Dataset& ds, const TrainConfig& cfg,
                    const MetricsSink& sink = {});

/// Moves a pretrained state into the fine-tuning stage with fresh velocities.
void begin_finetune(TrainState& state);

struct TrainResult {
  TrainState state;
  std::vector<MetricsRecord> history;
};

/// init_params -> pretrain_stage -> finetune_stage.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

TrainState initial_state(const Dataset& ds, const TrainConfig& cfg);

}  // namespace cmmp
