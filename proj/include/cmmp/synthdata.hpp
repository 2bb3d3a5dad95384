#pragma once

// Paired appearance/motion sequences whose label is the (shape, motion) pair.
// Appearance frames carry only the shape prototype; motion frames carry only
// the motion prototype under a class-specific square-wave envelope. Neither
// modality alone identifies the label.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "cmmp/tensor.hpp"

namespace cmmp {

struct DatasetSpec {
  std::size_t shape_classes = 4;   // K_s
  std::size_t motion_classes = 3;  // K_m
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 50;
  std::size_t frames = 40;          // N_f
  std::size_t appearance_dim = 24;  // P_a
  std::size_t motion_dim = 12;      // P_m
  std::size_t window = 5;           // L
  double noise = 0.3;               // sigma
  double motion_scale = 8.0;        // rho
  double crosstalk = 0.5;           // kappa
  std::uint64_t seed = 7;

  std::size_t classes() const { return shape_classes * motion_classes; }
};

/// Throws ConfigError on an inconsistent spec.
void validate(const DatasetSpec& spec);

struct Sample {
  Tensor appearance;  // [N_f x P_a]
  Tensor motion;      // [N_f x P_m]
  std::size_t label = 0;
};

struct Dataset {
  std::size_t frames = 0, appearance_dim = 0, motion_dim = 0;
  std::size_t classes = 0, shape_classes = 0, motion_classes = 0;
  double noise = 0.0, motion_scale = 0.0, crosstalk = 0.0;
  std::uint64_t seed = 0;
  std::vector<Sample> train, test;

  std::size_t shape_of(std::size_t label) const { return label / motion_classes; }
  std::size_t motion_of(std::size_t label) const { return label % motion_classes; }
};

Dataset generate(const DatasetSpec& spec);

/// Period (in frames) of the square-wave envelope for a motion class.
std::size_t envelope_period(std::size_t motion_class);

/// Orthonormal vectors from Gram-Schmidt on seeded Gaussian draws; [count x dim].
Tensor orthonormal_prototypes(std::size_t count, std::size_t dim, std::mt19937_64& rng);

enum class SamplingMode { train, eval };

/// Anchor frame of each of the T equal segments.
std::vector<std::size_t> segment_anchors(std::size_t frames, std::size_t segments,
                                         std::size_t window, SamplingMode mode,
                                         std::mt19937_64* rng);

struct SegmentedSample {
  Tensor appearance;  // [T x P_a]
  Tensor motion;      // [T x (L * P_m)]
};

SegmentedSample sample_segments(const Sample& sample, std::size_t segments, std::size_t window,
                                 SamplingMode mode, std::mt19937_64* rng = nullptr);

/// Time-major batch ready for the model: one [B x F] tensor per segment.
struct Batch {
  std::vector<Tensor> appearance;
  std::vector<Tensor> motion;
  std::vector<std::size_t> labels;
};

/// In train mode sample j draws its anchors from a stream derived from (seed, j).
Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices,
                 std::size_t segments, std::size_t window, SamplingMode mode,
                 std::uint64_t seed = 0);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace cmmp
