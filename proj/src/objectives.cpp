#include "cmmp/objectives.hpp"

#include <stdexcept>
#include <string>

#include "cmmp/errors.hpp"

namespace cmmp {

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Shape& s = logits.shape();
  const std::size_t classes = s.back();
  const std::size_t batch = s.size() == 1 ? 1 : s[0];
  if (labels.size() != batch) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                     to_string(s));
  }
  for (auto y : labels) {
    if (y >= classes) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) + " out of range for " +
                              std::to_string(classes) + " classes");
    }
  }
  Var per_sample = ad::sub(ad::logsumexp(logits), ad::pick(logits, labels));
  return ad::scale(ad::sum(per_sample), 1.0 / static_cast<double>(batch));
}

Var hinge(Var x) { return ad::relu(x); }

double hinge(double x) { return x > 0.0 ? x : 0.0; }

std::pair<Var, Var> adversarial_losses(Var L_a, Var L_m, bool detach_opponent) {
  Tape& tape = *L_a.tape;
  Var opp_m = detach_opponent ? tape.detach(L_m) : L_m;
  Var opp_a = detach_opponent ? tape.detach(L_a) : L_a;
  Var al_a = ad::add(L_a, hinge(ad::sub(L_a, opp_m)));
  Var al_m = ad::add(L_m, hinge(ad::sub(L_m, opp_a)));
  return {al_a, al_m};
}

LossBundle adversarial_values(double L_a, double L_m) {
  return {L_a, L_m, L_a + hinge(L_a - L_m), L_m + hinge(L_m - L_a)};
}

}  // namespace cmmp
