#include "cmmp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cmmp/errors.hpp"

namespace cmmp {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("not a number: '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("not a boolean: '" + std::string(v) + "'");
}

using Setter = std::function<void(TrainConfig&, std::string_view)>;

template <class T>
Setter number(T TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view v) { c.*field = parse_number<T>(v); };
}

Setter boolean(bool TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view v) { c.*field = parse_bool(v); };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"batch_size", number(&TrainConfig::batch_size)},
      {"momentum", number(&TrainConfig::momentum)},
      {"lr_pretrain", number(&TrainConfig::lr_pretrain)},
      {"lr_finetune", number(&TrainConfig::lr_finetune)},
      {"decay_every", number(&TrainConfig::decay_every)},
      {"decay_factor", number(&TrainConfig::decay_factor)},
      {"pretrain_iters", number(&TrainConfig::pretrain_iters)},
      {"finetune_iters", number(&TrainConfig::finetune_iters)},
      {"total_iters", number(&TrainConfig::total_iters)},
      {"seed", number(&TrainConfig::seed)},
      {"fusion_mode", [](TrainConfig& c, std::string_view v) { c.fusion_mode = parse_fusion_mode(v); }},
      {"adversarial", boolean(&TrainConfig::adversarial)},
      {"adversarial_detach", boolean(&TrainConfig::adversarial_detach)},
      {"eval_every", number(&TrainConfig::eval_every)},
      {"segments", number(&TrainConfig::segments)},
      {"window", number(&TrainConfig::window)},
      {"encoder_hidden", number(&TrainConfig::encoder_hidden)},
      {"feature_dim", number(&TrainConfig::feature_dim)},
      {"message_hidden", number(&TrainConfig::message_hidden)},
      {"score_weight_a", [](TrainConfig& c, std::string_view v) { c.score_weights[0] = parse_number<double>(v); }},
      {"score_weight_m", [](TrainConfig& c, std::string_view v) { c.score_weights[1] = parse_number<double>(v); }},
  };
  return table;
}

}  // namespace

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  TrainConfig cfg = base;
  bool total_given = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + std::string(key) + "): " + e.what());
    }
    total_given = total_given || key == "total_iters";
  }
  if (!total_given) cfg.total_iters = cfg.pretrain_iters + cfg.finetune_iters;
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "batch_size = " << c.batch_size << '\n'
     << "momentum = " << c.momentum << '\n'
     << "lr_pretrain = " << c.lr_pretrain << '\n'
     << "lr_finetune = " << c.lr_finetune << '\n'
     << "decay_every = " << c.decay_every << '\n'
     << "decay_factor = " << c.decay_factor << '\n'
     << "pretrain_iters = " << c.pretrain_iters << '\n'
     << "finetune_iters = " << c.finetune_iters << '\n'
     << "total_iters = " << c.total_iters << '\n'
     << "seed = " << c.seed << '\n'
     << "fusion_mode = " << to_string(c.fusion_mode) << '\n'
     << "adversarial = " << (c.adversarial ? "true" : "false") << '\n'
     << "adversarial_detach = " << (c.adversarial_detach ? "true" : "false") << '\n'
     << "eval_every = " << c.eval_every << '\n'
     << "segments = " << c.segments << '\n'
     << "window = " << c.window << '\n'
     << "encoder_hidden = " << c.encoder_hidden << '\n'
     << "feature_dim = " << c.feature_dim << '\n'
     << "message_hidden = " << c.message_hidden << '\n'
     << "score_weight_a = " << c.score_weights[0] << '\n'
     << "score_weight_m = " << c.score_weights[1] << '\n';
  return os.str();
}

}  // namespace cmmp
