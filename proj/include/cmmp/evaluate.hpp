#pragma once

#include <span>

#include "cmmp/model.hpp"
#include "cmmp/synthdata.hpp"

namespace cmmp {

struct Accuracy {
  std::size_t total = 0;
  std::size_t correct_spatial = 0, correct_temporal = 0, correct_fused = 0;

  double spatial() const { return percent(correct_spatial); }
  double temporal() const { return percent(correct_temporal); }
  double fused() const { return percent(correct_fused); }
  double percent(std::size_t correct) const;
};

/// Eval-mode (segment-center) accuracy of each stream and of the fused scores.
/// Throws ConfigError on an empty split.
Accuracy evaluate(const CMMPModel& model, FusionMode mode, std::span<const Sample> split,
                  std::size_t segments, std::size_t window);

}  // namespace cmmp
