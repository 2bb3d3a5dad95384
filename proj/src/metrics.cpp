#include "cmmp/metrics.hpp"

#include <fstream>

#include "cmmp/errors.hpp"

namespace cmmp {

bool MetricsRecord::same_result(const MetricsRecord& o) const {
  return stage == o.stage && iteration == o.iteration && L_a == o.L_a && L_m == o.L_m &&
         AL_a == o.AL_a && AL_m == o.AL_m && acc_spatial == o.acc_spatial &&
         acc_temporal == o.acc_temporal && acc_fused == o.acc_fused;
}

nlohmann::json to_json(const MetricsRecord& r) {
  return {{"stage", r.stage},           {"iteration", r.iteration},
          {"L_a", r.L_a},               {"L_m", r.L_m},
          {"AL_a", r.AL_a},             {"AL_m", r.AL_m},
          {"acc_spatial", r.acc_spatial}, {"acc_temporal", r.acc_temporal},
          {"acc_fused", r.acc_fused},   {"wall_ms", r.wall_ms}};
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  j.at("stage").get_to(r.stage);
  j.at("iteration").get_to(r.iteration);
  j.at("L_a").get_to(r.L_a);
  j.at("L_m").get_to(r.L_m);
  j.at("AL_a").get_to(r.AL_a);
  j.at("AL_m").get_to(r.AL_m);
  j.at("acc_spatial").get_to(r.acc_spatial);
  j.at("acc_temporal").get_to(r.acc_temporal);
  j.at("acc_fused").get_to(r.acc_fused);
  j.at("wall_ms").get_to(r.wall_ms);
  return r;
}

void append_metrics(const std::filesystem::path& path, const MetricsRecord& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw FormatError("cannot append metrics to '" + path.string() + "'");
  out << to_json(r).dump() << '\n';
}

std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open metrics file '" + path.string() + "'");
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(metrics_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad metrics line in '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

}  // namespace cmmp
