#include "cmmp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include "cmmp/errors.hpp"
#include "cmmp/evaluate.hpp"

namespace cmmp {

const std::array<CellSpec, 6>& matrix_cells() {
  static const std::array<CellSpec, 6> cells = {{
      {"SUM", FusionMode::sum, false},
      {"MAX", FusionMode::max, false},
      {"CMMP+noAL", FusionMode::cmmp, false},
      {"SUM+AL", FusionMode::sum, true},
      {"MAX+AL", FusionMode::max, true},
      {"CMMP", FusionMode::cmmp, true},
  }};
  return cells;
}

AccuracyStats mean_of(std::span<const MetricsRecord> runs) {
  AccuracyStats m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.spatial += r.acc_spatial;
    m.temporal += r.acc_temporal;
    m.fused += r.acc_fused;
  }
  const auto n = static_cast<double>(runs.size());
  return {m.spatial / n, m.temporal / n, m.fused / n};
}

AccuracyStats stddev_of(std::span<const MetricsRecord> runs) {
  if (runs.size() < 2) return {};
  const AccuracyStats m = mean_of(runs);
  AccuracyStats v;
  for (const auto& r : runs) {
    v.spatial += (r.acc_spatial - m.spatial) * (r.acc_spatial - m.spatial);
    v.temporal += (r.acc_temporal - m.temporal) * (r.acc_temporal - m.temporal);
    v.fused += (r.acc_fused - m.fused) * (r.acc_fused - m.fused);
  }
  const auto n = static_cast<double>(runs.size() - 1);
  return {std::sqrt(v.spatial / n), std::sqrt(v.temporal / n), std::sqrt(v.fused / n)};
}

std::vector<std::string> rank_cells(std::span<const ExperimentCell> cells) {
  std::vector<const ExperimentCell*> order;
  for (const auto& c : cells) {
    if (!c.failed) order.push_back(&c);
  }
  std::stable_sort(order.begin(), order.end(), [](const ExperimentCell* a, const ExperimentCell* b) {
    if (a->mean.fused != b->mean.fused) return a->mean.fused > b->mean.fused;
    return a->name < b->name;
  });
  std::vector<std::string> names;
  for (const auto* c : order) names.push_back(c->name);
  return names;
}

namespace {

MetricsRecord finetune_cell(const TrainState& pretrained, const Dataset& ds, TrainConfig cfg,
                            const CellSpec& cell) {
  cfg.fusion_mode = cell.mode;
  cfg.adversarial = cell.adversarial;
  // Only the stage-end record is needed.
  cfg.eval_every = 0;
  TrainState state = pretrained;
  state.model.fusion_mode = cell.mode;
  begin_finetune(state);
  MetricsRecord last;
  finetune_stage(state, ds, cfg, [&](const MetricsRecord& r) { last = r; });
  if (cfg.finetune_iters == 0) {
    const Accuracy a = evaluate(state.model, cell.mode, ds.test, cfg.segments, cfg.window);
    last.stage = "finetune";
    last.iteration = cfg.pretrain_iters;
    last.acc_spatial = a.spatial();
    last.acc_temporal = a.temporal();
    last.acc_fused = a.fused();
  }
  return last;
}

}  // namespace

MatrixResult run_matrix(const Dataset& ds, const TrainConfig& base,
                        std::span<const std::uint64_t> seeds, const MatrixOptions& opts) {
  if (seeds.empty()) throw ConfigError("run_matrix: at least one seed is required");
  validate(base);
  MatrixResult result;
  for (const auto& spec : matrix_cells()) {
    ExperimentCell cell;
    cell.name = spec.name;
    cell.mode = spec.mode;
    cell.adversarial = spec.adversarial;
    result.cells.push_back(cell);
  }

  for (const std::uint64_t seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    cfg.eval_every = 0;
    TrainState pretrained = initial_state(ds, cfg);
    MetricsRecord pre;
    pretrain_stage(pretrained, ds, cfg, [&](const MetricsRecord& r) { pre = r; });
    result.pretrain.push_back({seed, pre});
    if (opts.progress) {
      char line[160];
      std::snprintf(line, sizeof line, "seed %llu pretrain: spatial %.2f temporal %.2f fused %.2f",
                    static_cast<unsigned long long>(seed), pre.acc_spatial, pre.acc_temporal, pre.acc_fused);
      opts.progress(line);
    }

    const auto& specs = matrix_cells();
    std::vector<std::future<MetricsRecord>> pending(specs.size());
    auto launch = [&](std::size_t i) {
      const auto policy = opts.jobs > 1 ? std::launch::async : std::launch::deferred;
      pending[i] = std::async(policy, [&, i] { return finetune_cell(pretrained, ds, cfg, specs[i]); });
    };
    const std::size_t jobs = std::max<std::size_t>(1, opts.jobs);
    for (std::size_t start = 0; start < specs.size(); start += jobs) {
      const std::size_t end = std::min(specs.size(), start + jobs);
      for (std::size_t i = start; i < end; ++i) launch(i);
      for (std::size_t i = start; i < end; ++i) {
        ExperimentCell& cell = result.cells[i];
        if (cell.failed) {
          pending[i].wait();
          continue;
        }
        try {
          cell.runs.push_back(pending[i].get());
          cell.seeds.push_back(seed);
          if (opts.progress) {
            const auto& r = cell.runs.back();
            char line[160];
            std::snprintf(line, sizeof line, "seed %llu %-9s: spatial %.2f temporal %.2f fused %.2f",
                          static_cast<unsigned long long>(seed), cell.name.c_str(), r.acc_spatial,
                          r.acc_temporal, r.acc_fused);
            opts.progress(line);
          }
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
        }
      }
    }
  }

  for (auto& cell : result.cells) {
    cell.mean = mean_of(cell.runs);
    cell.stddev = stddev_of(cell.runs);
  }
  result.ranking = rank_cells(result.cells);
  return result;
}

nlohmann::json to_json(const MatrixResult& result) {
  nlohmann::json j;
  j["pretrain"] = nlohmann::json::array();
  for (const auto& p : result.pretrain) j["pretrain"].push_back({{"seed", p.seed}, {"record", to_json(p.record)}});
  j["cells"] = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json cell = {{"name", c.name},
                           {"fusion_mode", std::string(to_string(c.mode))},
                           {"adversarial", c.adversarial},
                           {"seeds", c.seeds},
                           {"failed", c.failed},
                           {"error", c.error},
                           {"mean", {{"spatial", c.mean.spatial}, {"temporal", c.mean.temporal}, {"fused", c.mean.fused}}},
                           {"stddev", {{"spatial", c.stddev.spatial}, {"temporal", c.stddev.temporal}, {"fused", c.stddev.fused}}}};
    cell["runs"] = nlohmann::json::array();
    for (const auto& r : c.runs) cell["runs"].push_back(to_json(r));
    j["cells"].push_back(std::move(cell));
  }
  j["ranking"] = result.ranking;
  return j;
}

std::string format_table(const MatrixResult& result) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %16s %16s %16s\n", "Method", "Spatial", "Temporal", "Fusion");
  os << line;
  for (const auto& c : result.cells) {
    if (c.failed) {
      os << c.name << "  FAILED: " << c.error << '\n';
      continue;
    }
    std::snprintf(line, sizeof line, "%-10s %8.2f +- %5.2f %8.2f +- %5.2f %8.2f +- %5.2f\n", c.name.c_str(),
                  c.mean.spatial, c.stddev.spatial, c.mean.temporal, c.stddev.temporal, c.mean.fused,
                  c.stddev.fused);
    os << line;
  }
  os << "ranking:";
  for (const auto& n : result.ranking) os << ' ' << n;
  os << '\n';
  return os.str();
}

}  // namespace cmmp
