#include "cmmp/gradcheck.hpp"

#include <cmath>
#include <random>

#include "cmmp/objectives.hpp"
#include "cmmp/seed.hpp"

namespace cmmp {
namespace {

struct Problem {
  std::vector<Tensor> raw_a, raw_m;  // T tensors, [B x P]
  std::vector<std::size_t> labels;
};

Problem random_problem(std::uint64_t seed, const GradcheckOptions& o) {
  std::mt19937_64 rng(derive_seed(seed, {9}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label(0, o.classes - 1);
  Problem p;
  for (std::size_t t = 0; t < o.segments; ++t) {
    Tensor a({o.batch, o.appearance_dim}), m({o.batch, o.motion_dim});
    for (double& v : a.data) v = normal(rng);
    for (double& v : m.data) v = normal(rng);
    p.raw_a.push_back(std::move(a));
    p.raw_m.push_back(std::move(m));
  }
  for (std::size_t b = 0; b < o.batch; ++b) p.labels.push_back(label(rng));
  return p;
}

struct Losses {
  Var L_a, L_m;
};

Losses stream_losses(Tape& tape, const CMMPModel& model, const Problem& p) {
  const ModelVars vars = bind(tape, model);
  Sequence a, m;
  for (const auto& x : p.raw_a) a.push_back(tape.constant(x));
  for (const auto& x : p.raw_m) m.push_back(tape.constant(x));
  const StreamOutputs out = forward_full(vars, FusionMode::cmmp, model.score_weights, a, m);
  return {cross_entropy(out.s_a, p.labels), cross_entropy(out.s_m, p.labels)};
}

std::vector<Tensor> parameters(const CMMPModel& model) {
  std::vector<Tensor> params;
  for_each_parameter(model, [&](const std::string&, const Tensor& t) { params.push_back(t); });
  return params;
}

CMMPModel with_parameters(const CMMPModel& model, const std::vector<Tensor>& params) {
  CMMPModel copy = model;
  std::size_t i = 0;
  for_each_parameter(copy, [&](const std::string&, Tensor& t) { t = params[i++]; });
  return copy;
}

}  // namespace

GradcheckReport full_model_gradcheck(std::uint64_t seed, const GradcheckOptions& o) {
  ModelDims dims;
  dims.appearance_dim = o.appearance_dim;
  dims.motion_dim = o.motion_dim;
  dims.encoder_hidden = o.encoder_hidden;
  dims.feature_dim = o.feature_dim;
  dims.message_hidden = o.message_hidden;
  dims.classes = o.classes;
  CMMPModel model = init_params(seed, dims);
  model.fusion_mode = FusionMode::cmmp;
  const Problem problem = random_problem(seed, o);

  Tape tape;
  const ModelVars vars = bind(tape, model);
  Sequence a, m;
  for (const auto& x : problem.raw_a) a.push_back(tape.constant(x));
  for (const auto& x : problem.raw_m) m.push_back(tape.constant(x));
  const StreamOutputs out = forward_full(vars, FusionMode::cmmp, model.score_weights, a, m);
  const Var L_a = cross_entropy(out.s_a, problem.labels);
  const Var L_m = cross_entropy(out.s_m, problem.labels);
  const auto [AL_a, AL_m] = adversarial_losses(L_a, L_m, o.detach_opponent);
  const Var total = ad::add(AL_a, AL_m);
  tape.backward(total);

  std::vector<Tensor> analytic;
  std::vector<std::string> names;
  for_each_parameter(vars, [&](const std::string& name, const Var& v) {
    analytic.push_back(tape.grad(v));
    names.push_back(name);
  });

  GradcheckReport report;
  report.loss = total.value().item();
  report.loss_gap = std::abs(L_a.value().item() - L_m.value().item());
  report.parameter_count = analytic.size();

  // With a detached opponent the thresholds are constants of the objective.
  const double threshold_a = L_a.value().item();
  const double threshold_m = L_m.value().item();
  auto objective = [&](const std::vector<Tensor>& params) {
    Tape eval(false);
    const Losses l = stream_losses(eval, with_parameters(model, params), problem);
    const double la = l.L_a.value().item();
    const double lm = l.L_m.value().item();
    if (o.detach_opponent) {
      return la + hinge(la - threshold_m) + lm + hinge(lm - threshold_a);
    }
    return la + hinge(la - lm) + lm + hinge(lm - la);
  };

  const std::vector<Tensor> numeric = finite_difference_grad(objective, parameters(model), o.step);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double err = max_mixed_error(analytic[i], numeric[i]);
    if (i == 0 || err > report.max_error) {
      report.max_error = err;
      report.worst_parameter = names[i];
    }
  }
  return report;
}

}  // namespace cmmp
