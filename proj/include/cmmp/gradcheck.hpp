#pragma once

#include <cstdint>
#include <string>

#include "cmmp/model.hpp"

namespace cmmp {

struct GradcheckOptions {
  std::size_t segments = 3;  // T
  std::size_t feature_dim = 4;
  std::size_t message_hidden = 4;
  std::size_t classes = 3;
  std::size_t batch = 2;
  std::size_t appearance_dim = 3;
  std::size_t motion_dim = 4;
  std::size_t encoder_hidden = 4;
  double step = 1e-5;
  bool detach_opponent = true;
};

struct GradcheckReport {
  double max_error = 0.0;  // max mixed error over all parameters
  std::string worst_parameter;
  std::size_t parameter_count = 0;
  double loss = 0.0;
  double loss_gap = 0.0;  // |L_a - L_m| at the evaluation point
};

/// Compares backward of AL_a + AL_m through the full cmmp graph against
/// central differences on a random tiny model and batch.
GradcheckReport full_model_gradcheck(std::uint64_t seed, const GradcheckOptions& opts = {});

}  // namespace cmmp
