#include "cmmp/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "cmmp/binary_io.hpp"
#include "cmmp/errors.hpp"
#include "cmmp/seed.hpp"

namespace cmmp {

namespace io {

std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write to '" + path + "' failed");
}

}  // namespace io

namespace {

constexpr std::string_view kDatasetMagic = "CMMPDS01";
constexpr std::uint32_t kDatasetVersion = 1;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

Tensor gaussian_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor w({dim});
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& v : w.data) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& v : w.data) v /= norm;
  return w;
}

}  // namespace

void validate(const DatasetSpec& s) {
  if (s.shape_classes == 0 || s.motion_classes == 0) throw ConfigError("dataset: class counts must be positive");
  if (s.train_per_class == 0 || s.test_per_class == 0) throw ConfigError("dataset: samples per class must be positive");
  if (s.frames == 0 || s.appearance_dim == 0 || s.motion_dim == 0) throw ConfigError("dataset: dimensions must be positive");
  if (s.shape_classes > s.appearance_dim) throw ConfigError("dataset: more shape classes than appearance dimensions");
  if (s.motion_classes > s.motion_dim) throw ConfigError("dataset: more motion classes than motion dimensions");
  if (s.window == 0 || s.window > s.frames) throw ConfigError("dataset: window must be in [1, frames]");
  if (!(s.motion_scale > 0.0)) throw ConfigError("dataset: motion scale must be positive");
  if (!(s.noise >= 0.0) || !(s.crosstalk >= 0.0)) throw ConfigError("dataset: noise and crosstalk must be non-negative");
}

std::size_t envelope_period(std::size_t motion_class) { return 2 * (motion_class + 2); }

Tensor orthonormal_prototypes(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  if (count > dim) throw ConfigError("prototypes: cannot draw " + std::to_string(count) + " orthonormal vectors in R^" + std::to_string(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor basis({count, dim});
  for (std::size_t k = 0; k < count; ++k) {
    double* v = basis.data.data() + k * dim;
    for (;;) {
      for (std::size_t j = 0; j < dim; ++j) v[j] = normal(rng);
      // Two passes of modified Gram-Schmidt keep the residual at rounding level.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < k; ++q) {
          const double* u = basis.data.data() + q * dim;
          double dot = 0.0;
          for (std::size_t j = 0; j < dim; ++j) dot += u[j] * v[j];
          for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * u[j];
        }
      }
      double norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) norm += v[j] * v[j];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t j = 0; j < dim; ++j) v[j] /= norm;
        break;
      }
    }
  }
  return basis;
}

Dataset generate(const DatasetSpec& spec) {
  validate(spec);
  Dataset ds;
  ds.frames = spec.frames;
  ds.appearance_dim = spec.appearance_dim;
  ds.motion_dim = spec.motion_dim;
  ds.classes = spec.classes();
  ds.shape_classes = spec.shape_classes;
  ds.motion_classes = spec.motion_classes;
  ds.noise = spec.noise;
  ds.motion_scale = spec.motion_scale;
  ds.crosstalk = spec.crosstalk;
  ds.seed = spec.seed;

  std::mt19937_64 proto_rng(derive_seed(spec.seed, {0}));
  const Tensor shapes = orthonormal_prototypes(spec.shape_classes, spec.appearance_dim, proto_rng);
  const Tensor motions = orthonormal_prototypes(spec.motion_classes, spec.motion_dim, proto_rng);

  auto make_sample = [&](std::size_t split, std::size_t index, std::size_t label) {
    const std::size_t shape_id = label / spec.motion_classes;
    const std::size_t motion_id = label % spec.motion_classes;
    Sample s;
    s.label = label;

    // Appearance and motion use separate streams: neither depends on the
    // other modality's class.
    std::mt19937_64 rng_a(derive_seed(spec.seed, {1, split, index, 0}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Tensor nuisance = gaussian_unit(spec.appearance_dim, rng_a);
    s.appearance = Tensor({spec.frames, spec.appearance_dim});
    for (std::size_t t = 0; t < spec.frames; ++t) {
      for (std::size_t j = 0; j < spec.appearance_dim; ++j) {
        const double v = shapes(shape_id, j) + spec.crosstalk * nuisance[j] + spec.noise * normal(rng_a);
        s.appearance(t, j) = to_f32(v);
      }
    }

    std::mt19937_64 rng_m(derive_seed(spec.seed, {1, split, index, 1}));
    const std::size_t period = envelope_period(motion_id);
    const std::size_t phase = std::uniform_int_distribution<std::size_t>(0, period - 1)(rng_m);
    s.motion = Tensor({spec.frames, spec.motion_dim});
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double envelope = ((t + phase) % period) < period / 2 ? 1.0 : -1.0;
      for (std::size_t j = 0; j < spec.motion_dim; ++j) {
        const double v = spec.motion_scale * motions(motion_id, j) * envelope + spec.noise * normal(rng_m);
        s.motion(t, j) = to_f32(v);
      }
    }
    return s;
  };

  const std::size_t per_split[2] = {spec.train_per_class, spec.test_per_class};
  for (std::size_t split = 0; split < 2; ++split) {
    auto& out = split == 0 ? ds.train : ds.test;
    out.reserve(per_split[split] * ds.classes);
    std::size_t index = 0;
    for (std::size_t label = 0; label < ds.classes; ++label) {
      for (std::size_t i = 0; i < per_split[split]; ++i) out.push_back(make_sample(split, index++, label));
    }
  }
  return ds;
}

std::vector<std::size_t> segment_anchors(std::size_t frames, std::size_t segments,
                                         std::size_t window, SamplingMode mode,
                                         std::mt19937_64* rng) {
  if (segments == 0 || segments > frames) {
    throw ConfigError("sampling: " + std::to_string(segments) + " segments do not fit " + std::to_string(frames) + " frames");
  }
  const std::size_t seg = frames / segments;
  if (window == 0 || seg < window) {
    throw ConfigError("sampling: window " + std::to_string(window) + " exceeds segment length " + std::to_string(seg));
  }
  if (mode == SamplingMode::train && rng == nullptr) throw ConfigError("sampling: train mode needs a generator");
  std::vector<std::size_t> anchors(segments);
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t offset = mode == SamplingMode::eval
                                   ? seg / 2
                                   : std::uniform_int_distribution<std::size_t>(0, seg - 1)(*rng);
    anchors[k] = k * seg + offset;
  }
  return anchors;
}

SegmentedSample sample_segments(const Sample& sample, std::size_t segments, std::size_t window,
                                SamplingMode mode, std::mt19937_64* rng) {
  const std::size_t frames = sample.appearance.rows();
  const std::size_t pa = sample.appearance.cols();
  const std::size_t pm = sample.motion.cols();
  const auto anchors = segment_anchors(frames, segments, window, mode, rng);
  const std::size_t seg = frames / segments;
  SegmentedSample out{Tensor({segments, pa}), Tensor({segments, window * pm})};
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t a = anchors[k];
    std::copy_n(sample.appearance.data.begin() + static_cast<std::ptrdiff_t>(a * pa), pa,
                out.appearance.data.begin() + static_cast<std::ptrdiff_t>(k * pa));
    const std::size_t start = std::min(a, k * seg + seg - window);
    std::copy_n(sample.motion.data.begin() + static_cast<std::ptrdiff_t>(start * pm), window * pm,
                out.motion.data.begin() + static_cast<std::ptrdiff_t>(k * window * pm));
  }
  return out;
}

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices,
                 std::size_t segments, std::size_t window, SamplingMode mode,
                 std::uint64_t seed) {
  if (indices.empty()) throw ConfigError("make_batch: empty batch");
  const std::size_t b = indices.size();
  const std::size_t pa = samples[indices[0]].appearance.cols();
  const std::size_t pm = samples[indices[0]].motion.cols() * window;
  Batch batch;
  batch.appearance.assign(segments, Tensor({b, pa}));
  batch.motion.assign(segments, Tensor({b, pm}));
  batch.labels.reserve(b);
  for (std::size_t j = 0; j < b; ++j) {
    const Sample& s = samples[indices[j]];
    std::mt19937_64 rng(derive_seed(seed, {j}));
    const SegmentedSample seg =
        sample_segments(s, segments, window, mode, mode == SamplingMode::train ? &rng : nullptr);
    for (std::size_t t = 0; t < segments; ++t) {
      std::copy_n(seg.appearance.data.begin() + static_cast<std::ptrdiff_t>(t * pa), pa,
                  batch.appearance[t].data.begin() + static_cast<std::ptrdiff_t>(j * pa));
      std::copy_n(seg.motion.data.begin() + static_cast<std::ptrdiff_t>(t * pm), pm,
                  batch.motion[t].data.begin() + static_cast<std::ptrdiff_t>(j * pm));
    }
    batch.labels.push_back(s.label);
  }
  return batch;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  io::Writer w;
  w.bytes(kDatasetMagic);
  w.u32(kDatasetVersion);
  for (std::size_t v : {ds.train.size(), ds.test.size(), ds.frames, ds.appearance_dim,
                        ds.motion_dim, ds.classes, ds.shape_classes, ds.motion_classes}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  w.f64(ds.noise);
  w.f64(ds.motion_scale);
  w.f64(ds.crosstalk);
  w.u64(ds.seed);
  for (const auto* split : {&ds.train, &ds.test}) {
    for (const Sample& s : *split) {
      w.u32(static_cast<std::uint32_t>(s.label));
      for (double v : s.appearance.data) w.f32(static_cast<float>(v));
      for (double v : s.motion.data) w.f32(static_cast<float>(v));
    }
  }
  io::write_file(path.string(), w.buffer());
}

Dataset load_dataset(const std::filesystem::path& path) {
  io::Reader r(io::read_file(path.string()));
  if (r.remaining() < kDatasetMagic.size() || r.bytes(kDatasetMagic.size()) != kDatasetMagic) {
    throw BadMagicError("bad magic: '" + path.string() + "' is not a CMMP dataset");
  }
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw VersionMismatchError("version mismatch: dataset version " + std::to_string(version) +
                               ", expected " + std::to_string(kDatasetVersion));
  }
  Dataset ds;
  const std::size_t n_train = r.u32();
  const std::size_t n_test = r.u32();
  ds.frames = r.u32();
  ds.appearance_dim = r.u32();
  ds.motion_dim = r.u32();
  ds.classes = r.u32();
  ds.shape_classes = r.u32();
  ds.motion_classes = r.u32();
  ds.noise = r.f64();
  ds.motion_scale = r.f64();
  ds.crosstalk = r.f64();
  ds.seed = r.u64();
  if (ds.classes != ds.shape_classes * ds.motion_classes || ds.frames == 0 ||
      ds.appearance_dim == 0 || ds.motion_dim == 0) {
    throw FormatError("inconsistent dataset header in '" + path.string() + "'");
  }
  const std::size_t sample_bytes = 4 + 4 * ds.frames * (ds.appearance_dim + ds.motion_dim);
  if (r.remaining() < sample_bytes * (n_train + n_test)) {
    throw TruncatedFileError("truncated file: '" + path.string() + "' holds " +
                             std::to_string(r.remaining()) + " sample bytes, header promises " +
                             std::to_string(sample_bytes * (n_train + n_test)));
  }
  auto read_split = [&](std::size_t n, std::vector<Sample>& out) {
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      s.label = r.u32();
      if (s.label >= ds.classes) throw FormatError("dataset label " + std::to_string(s.label) + " out of range");
      s.appearance = Tensor({ds.frames, ds.appearance_dim});
      for (auto& v : s.appearance.data) v = r.f32();
      s.motion = Tensor({ds.frames, ds.motion_dim});
      for (auto& v : s.motion.data) v = r.f32();
      out.push_back(std::move(s));
    }
  };
  read_split(n_train, ds.train);
  read_split(n_test, ds.test);
  return ds;
}

}  // namespace cmmp
