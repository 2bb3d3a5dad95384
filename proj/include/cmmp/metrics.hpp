#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace cmmp {

struct MetricsRecord {
  std::string stage;
  std::size_t iteration = 0;
  double L_a = 0.0, L_m = 0.0, AL_a = 0.0, AL_m = 0.0;
  double acc_spatial = 0.0, acc_temporal = 0.0, acc_fused = 0.0;  // percent
  double wall_ms = 0.0;

  /// Equality over everything except wall-clock time.
  bool same_result(const MetricsRecord& o) const;
};

nlohmann::json to_json(const MetricsRecord& r);
MetricsRecord metrics_from_json(const nlohmann::json& j);

/// Appends one JSON object per line.
void append_metrics(const std::filesystem::path& path, const MetricsRecord& r);
std::vector<MetricsRecord> read_metrics(const std::filesystem::path& path);

}  // namespace cmmp
