#include "cmmp/evaluate.hpp"

#include <algorithm>
#include <numeric>

#include "cmmp/errors.hpp"

namespace cmmp {

double Accuracy::percent(std::size_t correct) const {
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

Accuracy evaluate(const CMMPModel& model, FusionMode mode, std::span<const Sample> split,
                  std::size_t segments, std::size_t window) {
  if (split.empty()) throw ConfigError("evaluate: empty split");
  constexpr std::size_t kChunk = 256;
  Accuracy acc;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < split.size(); begin += kChunk) {
    const std::size_t end = std::min(split.size(), begin + kChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Batch batch = make_batch(split, idx, segments, window, SamplingMode::eval);

    Tape tape(/*differentiable=*/false);
    const ModelVars vars = bind(tape, model);
    Sequence raw_a, raw_m;
    for (const auto& t : batch.appearance) raw_a.push_back(tape.constant(t));
    for (const auto& t : batch.motion) raw_m.push_back(tape.constant(t));
    const StreamOutputs out = forward_full(vars, mode, model.score_weights, raw_a, raw_m);

    const Tensor p_a = softmax_rows(out.s_a.value());
    const Tensor p_m = softmax_rows(out.s_m.value());
    const std::size_t c = p_a.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const std::size_t y = batch.labels[i];
      auto row = [&](const Tensor& t) { return std::span<const double>(t.data.data() + i * c, c); };
      acc.correct_spatial += predict(row(p_a)) == y;
      acc.correct_temporal += predict(row(p_m)) == y;
      acc.correct_fused += predict(row(out.fused_probs)) == y;
    }
    acc.total += idx.size();
  }
  return acc;
}

}  // namespace cmmp
