#pragma once

// The six-cell ablation matrix: {SUM, MAX, CMMP} fusion x {CE, adversarial}
// fine-tuning objective, all cells starting from one shared pretrained model
// per seed.

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmmp/trainer.hpp"

namespace cmmp {

struct CellSpec {
  std::string name;
  FusionMode mode;
  bool adversarial;
};

/// Table rows in order: SUM, MAX, CMMP+noAL, SUM+AL, MAX+AL, CMMP.
const std::array<CellSpec, 6>& matrix_cells();

struct AccuracyStats {
  double spatial = 0.0, temporal = 0.0, fused = 0.0;
};

struct ExperimentCell {
  std::string name;
  FusionMode mode = FusionMode::cmmp;
  bool adversarial = false;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsRecord> runs;  // final record per seed
  AccuracyStats mean, stddev;
  bool failed = false;
  std::string error;
};

struct PretrainResult {
  std::uint64_t seed = 0;
  MetricsRecord record;
};

struct MatrixResult {
  std::vector<PretrainResult> pretrain;
  std::vector<ExperimentCell> cells;
  std::vector<std::string> ranking;  // cell names by mean fused accuracy, best first
};

struct MatrixOptions {
  std::size_t jobs = 1;  // fine-tuning threads per seed
  std::function<void(const std::string&)> progress;
};

MatrixResult run_matrix(const Dataset& ds, const TrainConfig& base,
                        std::span<const std::uint64_t> seeds, const MatrixOptions& opts = {});

/// Names sorted by mean fused accuracy (descending), ties by name.
std::vector<std::string> rank_cells(std::span<const ExperimentCell> cells);

AccuracyStats mean_of(std::span<const MetricsRecord> runs);
AccuracyStats stddev_of(std::span<const MetricsRecord> runs);

nlohmann::json to_json(const MatrixResult& result);
std::string format_table(const MatrixResult& result);

}  // namespace cmmp
