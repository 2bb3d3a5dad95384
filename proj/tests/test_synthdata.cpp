#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "cmmp/binary_io.hpp"
#include "cmmp/errors.hpp"
#include "cmmp/synthdata.hpp"

using namespace cmmp;

namespace {

DatasetSpec small_spec() {
  DatasetSpec s;
  s.train_per_class = 6;
  s.test_per_class = 3;
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cmmp_synth_" + name);
}

std::vector<char> bytes_of(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("prototypes are orthonormal") {
  std::mt19937_64 rng(3);
  for (const auto [count, dim] : {std::pair<std::size_t, std::size_t>{4, 24}, {3, 12}, {12, 12}}) {
    const Tensor u = orthonormal_prototypes(count, dim, rng);
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < count; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += u(i, k) * u(j, k);
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-10);
      }
    }
  }
  CHECK_THROWS_AS(orthonormal_prototypes(5, 4, rng), ConfigError);
}

TEST_CASE("generated splits are class balanced and well formed") {
  const DatasetSpec spec = small_spec();
  const Dataset ds = generate(spec);
  CHECK(ds.classes == 12);
  CHECK(ds.train.size() == 12 * spec.train_per_class);
  CHECK(ds.test.size() == 12 * spec.test_per_class);
  std::map<std::size_t, std::size_t> train_counts, test_counts;
  for (const auto& s : ds.train) {
    ++train_counts[s.label];
    CHECK(s.appearance.shape == Shape{40, 24});
    CHECK(s.motion.shape == Shape{40, 12});
    CHECK(s.appearance.all_finite());
    CHECK(s.motion.all_finite());
  }
  for (const auto& s : ds.test) ++test_counts[s.label];
  for (std::size_t c = 0; c < 12; ++c) {
    CHECK(train_counts[c] == spec.train_per_class);
    CHECK(test_counts[c] == spec.test_per_class);
  }
  CHECK(ds.shape_of(7) == 2);
  CHECK(ds.motion_of(7) == 1);
}

TEST_CASE("DatasetSpec validation") {
  DatasetSpec s;
  s.motion_scale = 0.0;
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = {};
  s.window = 41;
  CHECK_THROWS_AS(generate(s), ConfigError);
  s = {};
  s.shape_classes = 0;
  CHECK_THROWS_AS(generate(s), ConfigError);
}

TEST_CASE("appearance bytes do not depend on the motion modality") {
  DatasetSpec a = small_spec(), b = small_spec();
  b.motion_scale = 3.0;
  const Dataset da = generate(a), db = generate(b);
  for (std::size_t i = 0; i < da.train.size(); ++i) {
    CHECK(da.train[i].appearance == db.train[i].appearance);
    CHECK(!(da.train[i].motion == db.train[i].motion));
  }
}

TEST_CASE("each modality identifies only its own factor") {
  const Dataset ds = generate(DatasetSpec{});
  // Per-label mean appearance frame and mean |motion| frame.
  std::vector<std::vector<double>> app(12, std::vector<double>(24)), mot(12, std::vector<double>(12));
  std::vector<double> n(12);
  for (const auto& s : ds.train) {
    n[s.label] += 40.0;
    for (std::size_t t = 0; t < 40; ++t) {
      for (std::size_t j = 0; j < 24; ++j) app[s.label][j] += s.appearance(t, j);
      for (std::size_t j = 0; j < 12; ++j) mot[s.label][j] += std::abs(s.motion(t, j));
    }
  }
  auto dist = [](const std::vector<double>& x, const std::vector<double>& y, double nx, double ny) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] / nx - y[j] / ny) * (x[j] / nx - y[j] / ny);
    return std::sqrt(d);
  };
  for (std::size_t a = 0; a < 12; ++a) {
    for (std::size_t b = a + 1; b < 12; ++b) {
      const double da = dist(app[a], app[b], n[a], n[b]);
      const double dm = dist(mot[a], mot[b], n[a], n[b]);
      if (ds.shape_of(a) == ds.shape_of(b)) CHECK(da < 0.2);
      else CHECK(da > 1.0);
      if (ds.motion_of(a) == ds.motion_of(b)) CHECK(dm < 0.5);
      else CHECK(dm > 2.0);
    }
  }
}

TEST_CASE("motion envelope is a class-specific square wave") {
  CHECK(envelope_period(0) == 4);
  CHECK(envelope_period(1) == 6);
  CHECK(envelope_period(2) == 8);
  DatasetSpec s = small_spec();
  s.noise = 0.0;
  const Dataset ds = generate(s);
  for (const auto& sample : ds.train) {
    const std::size_t period = envelope_period(ds.motion_of(sample.label));
    std::size_t flips = 0;
    for (std::size_t t = 1; t < 40; ++t) {
      const bool pos = sample.motion(t, 0) * sample.motion(0, 0) > 0;
      const bool prev = sample.motion(t - 1, 0) * sample.motion(0, 0) > 0;
      flips += pos != prev;
    }
    const double expected = 2.0 * 40.0 / static_cast<double>(period);
    CHECK(std::abs(static_cast<double>(flips) - expected) <= 1.0);
  }
}

TEST_CASE("segment anchors") {
  CHECK(segment_anchors(40, 8, 5, SamplingMode::eval, nullptr) ==
        std::vector<std::size_t>{2, 7, 12, 17, 22, 27, 32, 37});
  std::mt19937_64 rng(4);
  for (int n = 0; n < 100; ++n) {
    const auto anchors = segment_anchors(40, 8, 5, SamplingMode::train, &rng);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(anchors[k] >= 5 * k);
      CHECK(anchors[k] < 5 * (k + 1));
    }
  }
  CHECK_THROWS_AS(segment_anchors(40, 41, 1, SamplingMode::eval, nullptr), ConfigError);
  CHECK_THROWS_AS(segment_anchors(40, 8, 6, SamplingMode::eval, nullptr), ConfigError);
}

TEST_CASE("segment sampling") {
  const Dataset ds = generate(small_spec());
  const Sample& s = ds.train[5];
  SUBCASE("window of one is the anchor frame") {
    const SegmentedSample seg = sample_segments(s, 8, 1, SamplingMode::eval);
    const auto anchors = segment_anchors(40, 8, 1, SamplingMode::eval, nullptr);
    for (std::size_t k = 0; k < 8; ++k) {
      for (std::size_t j = 0; j < 12; ++j) CHECK(seg.motion(k, j) == s.motion(anchors[k], j));
      for (std::size_t j = 0; j < 24; ++j) CHECK(seg.appearance(k, j) == s.appearance(anchors[k], j));
    }
  }
  SUBCASE("windows are clamped to their segment") {
    const SegmentedSample seg = sample_segments(s, 8, 5, SamplingMode::eval);
    CHECK(seg.motion.shape == Shape{8, 60});
    // The center anchor 2 of segment [0, 5) is clamped to start at 0.
    for (std::size_t l = 0; l < 5; ++l) {
      for (std::size_t j = 0; j < 12; ++j) CHECK(seg.motion(0, l * 12 + j) == s.motion(l, j));
    }
  }
  SUBCASE("batches are time-major and deterministic") {
    const std::vector<std::size_t> idx{3, 0, 7};
    const Batch a = make_batch(ds.train, idx, 8, 5, SamplingMode::train, 99);
    const Batch b = make_batch(ds.train, idx, 8, 5, SamplingMode::train, 99);
    REQUIRE(a.appearance.size() == 8);
    CHECK(a.appearance[0].shape == Shape{3, 24});
    CHECK(a.motion[0].shape == Shape{3, 60});
    CHECK(a.labels == std::vector<std::size_t>{ds.train[3].label, ds.train[0].label, ds.train[7].label});
    CHECK(a.appearance == b.appearance);
    CHECK(a.motion == b.motion);
  }
}

TEST_CASE("dataset files") {
  const Dataset ds = generate(small_spec());
  const auto p1 = temp_path("a.bin"), p2 = temp_path("b.bin"), p3 = temp_path("c.bin");

  SUBCASE("same seed gives byte-identical files") {
    save_dataset(ds, p1);
    save_dataset(generate(small_spec()), p2);
    CHECK(bytes_of(p1) == bytes_of(p2));
  }
  SUBCASE("save, load, save round-trips byte for byte") {
    save_dataset(ds, p1);
    const Dataset back = load_dataset(p1);
    save_dataset(back, p2);
    CHECK(bytes_of(p1) == bytes_of(p2));
    CHECK(back.train.size() == ds.train.size());
    CHECK(back.test.size() == ds.test.size());
    CHECK(back.classes == 12);
    CHECK(back.frames == 40);
    CHECK(back.train[4].appearance == ds.train[4].appearance);
    CHECK(back.test[2].motion == ds.test[2].motion);
    CHECK(back.noise == ds.noise);
    CHECK(back.seed == ds.seed);
  }
  SUBCASE("header layout") {
    save_dataset(ds, p1);
    const auto b = bytes_of(p1);
    io::Reader r(b);
    CHECK(r.bytes(8) == "CMMPDS01");
    CHECK(r.u32() == 1);
    CHECK(r.u32() == ds.train.size());
    CHECK(r.u32() == ds.test.size());
    CHECK(r.u32() == 40);
    CHECK(r.u32() == 24);
    CHECK(r.u32() == 12);
    CHECK(r.u32() == 12);
    CHECK(r.u32() == 4);
    CHECK(r.u32() == 3);
    CHECK(r.f64() == 0.3);
    CHECK(r.f64() == 8.0);
    CHECK(r.f64() == 0.5);
    CHECK(r.u64() == 7);
    const std::size_t header = 8 + 4 * 9 + 8 * 3 + 8;
    const std::size_t per_sample = 4 + 4 * 40 * (24 + 12);
    CHECK(b.size() == header + per_sample * (ds.train.size() + ds.test.size()));
  }
  SUBCASE("corrupted magic") {
    save_dataset(ds, p1);
    auto b = bytes_of(p1);
    b[0] = 'X';
    write_bytes(p3, b);
    CHECK_THROWS_WITH_AS(load_dataset(p3), doctest::Contains("bad magic"), BadMagicError);
  }
  SUBCASE("version mismatch") {
    save_dataset(ds, p1);
    auto b = bytes_of(p1);
    b[8] = 2;
    write_bytes(p3, b);
    CHECK_THROWS_WITH_AS(load_dataset(p3), doctest::Contains("version mismatch"), VersionMismatchError);
  }
  SUBCASE("truncated file") {
    save_dataset(ds, p1);
    auto b = bytes_of(p1);
    b.resize(b.size() - 10);
    write_bytes(p3, b);
    CHECK_THROWS_WITH_AS(load_dataset(p3), doctest::Contains("truncated file"), TruncatedFileError);
    b.resize(20);
    write_bytes(p3, b);
    CHECK_THROWS_AS(load_dataset(p3), TruncatedFileError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(temp_path("does_not_exist.bin")), FormatError);
  }
  for (const auto& p : {p1, p2, p3}) std::filesystem::remove(p);
}
