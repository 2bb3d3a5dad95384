#pragma once

#include <span>
#include <utility>

#include "cmmp/autodiff.hpp"

namespace cmmp {

struct LossBundle {
  double L_a = 0.0, L_m = 0.0;    // per-stream cross-entropy, batch mean
  double AL_a = 0.0, AL_m = 0.0;  // competing objectives
};

/// Softmax cross-entropy -(s_y - logsumexp(s)), averaged over the batch.
/// logits is [B x C] with B labels, or [C] with one label.
/// Throws std::out_of_range for a label outside [0, C).
Var cross_entropy(Var logits, std::span<const std::size_t> labels);

/// f(x) = max(x, 0) with derivative 0 at the kink.
Var hinge(Var x);
double hinge(double x);

/// AL_a = L_a + f(L_a - L_m), AL_m = L_m + f(L_m - L_a).
/// With detach_opponent the opponent's loss enters f as a constant threshold.
std::pair<Var, Var> adversarial_losses(Var L_a, Var L_m, bool detach_opponent = true);

LossBundle adversarial_values(double L_a, double L_m);

}  // namespace cmmp
