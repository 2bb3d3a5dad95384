#pragma once

// Checkpoint container: magic "CMMPCK01", u32 version, a manifest of
// (name, shape) entries in fixed traversal order, then the f64 payload of
// every entry in manifest order. Entries are the model parameters, one
// "velocity/<name>" per parameter, "settings" (fusion mode, score weights)
// and "progress" (stage, completed iterations, loss sums since the last
// metrics record). Little-endian throughout.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmmp/trainer.hpp"

namespace cmmp {

struct ManifestEntry {
  std::string name;
  Shape shape;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

std::vector<ManifestEntry> checkpoint_manifest(const CMMPModel& model);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);

/// Dimensions are inferred from the manifest, which must then match the
/// layout those dimensions imply.
TrainState load_checkpoint(const std::filesystem::path& path);

/// Throws ManifestMismatchError unless the stored layout matches `expected`.
TrainState load_checkpoint(const std::filesystem::path& path, const ModelDims& expected);

}  // namespace cmmp
