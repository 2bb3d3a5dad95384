// Command-line front end: dataset generation, training, evaluation, the
// ablation matrix and the full-model gradient check.
//
// Exit codes: 0 success, 1 usage error, 2 data/format/config error,
// 3 numeric failure (including a failed gradient check).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "cmmp/bench.hpp"
#include "cmmp/checkpoint.hpp"
#include "cmmp/config.hpp"
#include "cmmp/errors.hpp"
#include "cmmp/evaluate.hpp"
#include "cmmp/gradcheck.hpp"
#include "cmmp/synthdata.hpp"
#include "cmmp/trainer.hpp"

namespace {

using namespace cmmp;

constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

struct GenDataArgs {
  std::string out;
  DatasetSpec spec;
};

struct TrainArgs {
  std::string data, config, out_dir = ".", stage = "both", resume;
};

struct EvalArgs {
  std::string data, ckpt;
  std::optional<std::size_t> segments, window;
};

struct BenchArgs {
  std::string data, config, seeds = "1,2,3", out;
  std::size_t jobs = 1;
};

struct GradcheckArgs {
  std::uint64_t seed = 1;
  double tol = 1e-6;
  std::string dims = "3,4,4,3";
  bool no_detach = false;
};

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " list '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

TrainConfig config_from(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_config(path);
}

void print_record(const MetricsRecord& r) {
  std::printf("%-8s iter %6zu  L_a %.4f  L_m %.4f  spatial %6.2f  temporal %6.2f  fused %6.2f\n",
              r.stage.c_str(), r.iteration, r.L_a, r.L_m, r.acc_spatial, r.acc_temporal, r.acc_fused);
  std::fflush(stdout);
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

int run_gen_data(const GenDataArgs& a) {
  const Dataset ds = generate(a.spec);
  ensure_parent(a.out);
  save_dataset(ds, a.out);
  std::printf("wrote %zu train / %zu test samples, %zu classes to %s\n", ds.train.size(), ds.test.size(),
              ds.classes, a.out.c_str());
  return 0;
}

int run_train(const TrainArgs& a) {
  if (a.stage != "pretrain" && a.stage != "finetune" && a.stage != "both") {
    throw ConfigError("stage must be pretrain, finetune or both");
  }
  const Dataset ds = load_dataset(a.data);
  const TrainConfig cfg = config_from(a.config);
  validate(cfg);
  const std::filesystem::path dir = a.out_dir;
  std::filesystem::create_directories(dir);
  const auto metrics_path = dir / "metrics.jsonl";

  TrainState state;
  if (!a.resume.empty()) {
    state = load_checkpoint(a.resume, model_dims(ds, cfg));
  } else if (a.stage == "finetune") {
    state = load_checkpoint(dir / "pretrain.ckpt", model_dims(ds, cfg));
  } else {
    state = initial_state(ds, cfg);
  }
  state.model.fusion_mode = cfg.fusion_mode;
  state.model.score_weights = cfg.score_weights;

  const MetricsSink sink = [&](const MetricsRecord& r) {
    append_metrics(metrics_path, r);
    print_record(r);
  };
  if (a.stage != "finetune" && state.stage == Stage::pretrain) {
    pretrain_stage(state, ds, cfg, sink);
    save_checkpoint(state, dir / "pretrain.ckpt");
  }
  if (a.stage != "pretrain" && cfg.finetune_iters > 0) {
    finetune_stage(state, ds, cfg, sink);
    save_checkpoint(state, dir / "final.ckpt");
  }
  return 0;
}

int run_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const TrainState state = load_checkpoint(a.ckpt);
  const TrainConfig defaults;
  const std::size_t T = a.segments.value_or(defaults.segments);
  const std::size_t L = a.window.value_or(defaults.window);
  // Pretrained checkpoints run with independent streams.
  const FusionMode mode = state.stage == Stage::pretrain ? FusionMode::none : state.model.fusion_mode;
  const Accuracy acc = evaluate(state.model, mode, ds.test, T, L);
  const nlohmann::json j = {{"samples", acc.total},
                            {"fusion_mode", std::string(to_string(mode))},
                            {"acc_spatial", acc.spatial()},
                            {"acc_temporal", acc.temporal()},
                            {"acc_fused", acc.fused()}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_bench(const BenchArgs& a) {
  const Dataset ds = load_dataset(a.data);
  const TrainConfig cfg = config_from(a.config);
  std::vector<std::uint64_t> seeds;
  for (const auto s : parse_list(a.seeds, "seed")) seeds.push_back(s);
  MatrixOptions opts;
  opts.jobs = a.jobs;
  opts.progress = [](const std::string& line) {
    std::fprintf(stderr, "%s\n", line.c_str());
  };
  const MatrixResult result = run_matrix(ds, cfg, seeds, opts);
  std::cout << format_table(result);
  if (!a.out.empty()) {
    ensure_parent(a.out);
    std::ofstream out(a.out);
    if (!out) throw FormatError("cannot write '" + a.out + "'");
    out << to_json(result).dump(2) << '\n';
  }
  return 0;
}

int run_gradcheck(const GradcheckArgs& a) {
  const auto dims = parse_list(a.dims, "dims");
  if (dims.size() != 4) throw ConfigError("--dims expects T,D,H,C");
  GradcheckOptions opts;
  opts.segments = dims[0];
  opts.feature_dim = dims[1];
  opts.message_hidden = dims[2];
  opts.classes = dims[3];
  opts.detach_opponent = !a.no_detach;
  const GradcheckReport r = full_model_gradcheck(a.seed, opts);
  const bool pass = r.max_error <= a.tol;
  std::printf("%s max mixed error %.3e (tol %.1e) over %zu parameters, worst %s\n", pass ? "PASS" : "FAIL",
              r.max_error, a.tol, r.parameter_count, r.worst_parameter.c_str());
  return pass ? 0 : kNumericError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream sequence classifier with cross-modal message passing"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset file");
  gen_cmd->add_option("--out", gen.out, "Output path")->required();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed");
  gen_cmd->add_option("--shape-classes", gen.spec.shape_classes);
  gen_cmd->add_option("--motion-classes", gen.spec.motion_classes);
  gen_cmd->add_option("--train-per-class", gen.spec.train_per_class);
  gen_cmd->add_option("--test-per-class", gen.spec.test_per_class);
  gen_cmd->add_option("--frames", gen.spec.frames);
  gen_cmd->add_option("--appearance-dim", gen.spec.appearance_dim);
  gen_cmd->add_option("--motion-dim", gen.spec.motion_dim);
  gen_cmd->add_option("--window", gen.spec.window);
  gen_cmd->add_option("--noise", gen.spec.noise);
  gen_cmd->add_option("--motion-scale", gen.spec.motion_scale);
  gen_cmd->add_option("--crosstalk", gen.spec.crosstalk);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Pretrain and/or fine-tune, writing checkpoints and metrics");
  train_cmd->add_option("--data", train_args.data, "Dataset file")->required();
  train_cmd->add_option("--config", train_args.config, "Config file of key = value lines");
  train_cmd->add_option("--out-dir", train_args.out_dir, "Directory for checkpoints and metrics.jsonl");
  train_cmd->add_option("--stage", train_args.stage, "pretrain, finetune or both");
  train_cmd->add_option("--resume", train_args.resume, "Continue from a checkpoint");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Test-split accuracy of a checkpoint");
  eval_cmd->add_option("--data", eval_args.data, "Dataset file")->required();
  eval_cmd->add_option("--ckpt", eval_args.ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--segments", eval_args.segments, "Segments per sequence");
  eval_cmd->add_option("--window", eval_args.window, "Motion window length");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run the six-cell fusion x objective matrix");
  bench_cmd->add_option("--data", bench_args.data, "Dataset file")->required();
  bench_cmd->add_option("--config", bench_args.config, "Config file of key = value lines");
  bench_cmd->add_option("--seeds", bench_args.seeds, "Comma-separated seeds");
  bench_cmd->add_option("--out", bench_args.out, "JSON output path");
  bench_cmd->add_option("--jobs", bench_args.jobs, "Fine-tuning threads");

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  gc_cmd->add_option("--seed", gc_args.seed);
  gc_cmd->add_option("--tol", gc_args.tol, "Maximum mixed error");
  gc_cmd->add_option("--dims", gc_args.dims, "T,D,H,C");
  gc_cmd->add_flag("--no-detach", gc_args.no_detach, "Let gradients flow into the opponent loss");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*bench_cmd) return run_bench(bench_args);
    if (*gc_cmd) return run_gradcheck(gc_args);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
