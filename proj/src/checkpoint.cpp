#include "cmmp/checkpoint.hpp"

#include "cmmp/binary_io.hpp"
#include "cmmp/errors.hpp"

namespace cmmp {
namespace {

constexpr std::string_view kCheckpointMagic = "CMMPCK01";
constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<Tensor*> payload(TrainState& s, Tensor& settings, Tensor& progress) {
  std::vector<Tensor*> out;
  for_each_parameter(s.model, [&](const std::string&, Tensor& t) { out.push_back(&t); });
  for (auto& v : s.optimizer.velocity) out.push_back(&v);
  out.push_back(&settings);
  out.push_back(&progress);
  return out;
}

std::string describe(const ManifestEntry& e) { return e.name + " " + to_string(e.shape); }

ModelDims infer_dims(const std::vector<ManifestEntry>& manifest) {
  auto find = [&](const std::string& name) -> const Shape& {
    for (const auto& e : manifest) {
      if (e.name == name && e.shape.size() == 2) return e.shape;
    }
    throw ManifestMismatchError("shape manifest mismatch: missing or malformed entry '" + name + "'");
  };
  ModelDims d;
  d.encoder_hidden = find("enc_a.l1.weight")[0];
  d.appearance_dim = find("enc_a.l1.weight")[1];
  d.motion_dim = find("enc_m.l1.weight")[1];
  d.feature_dim = find("enc_a.l2.weight")[0];
  d.message_hidden = find("gen_a.layer1.w_hh")[1];
  d.classes = find("head_a.weight")[0];
  return d;
}

std::vector<ManifestEntry> read_header(io::Reader& r, const std::filesystem::path& path) {
  if (r.remaining() < kCheckpointMagic.size() || r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw BadMagicError("bad magic: '" + path.string() + "' is not a CMMP checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("version mismatch: checkpoint version " + std::to_string(version) +
                               ", expected " + std::to_string(kCheckpointVersion));
  }
  const std::uint32_t count = r.u32();
  std::vector<ManifestEntry> stored;
  for (std::uint32_t i = 0; i < count; ++i) {
    ManifestEntry e;
    e.name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 4) {
      throw ManifestMismatchError("shape manifest mismatch: entry '" + e.name + "' has rank " +
                                  std::to_string(rank));
    }
    for (std::uint32_t k = 0; k < rank; ++k) e.shape.push_back(r.u32());
    stored.push_back(std::move(e));
  }
  return stored;
}

}  // namespace

std::vector<ManifestEntry> checkpoint_manifest(const CMMPModel& model) {
  std::vector<ManifestEntry> m;
  for_each_parameter(model, [&](const std::string& name, const Tensor& t) { m.push_back({name, t.shape}); });
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) m.push_back({"velocity/" + m[i].name, m[i].shape});
  m.push_back({"settings", {3}});
  m.push_back({"progress", {7}});
  return m;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  TrainState copy = state;
  Tensor settings({3}, std::vector<double>{static_cast<double>(state.model.fusion_mode),
                                           state.model.score_weights[0],
                                           state.model.score_weights[1]});
  Tensor progress({7}, std::vector<double>{static_cast<double>(state.stage), static_cast<double>(state.iteration),
                                           static_cast<double>(state.window_count), state.window.L_a,
                                           state.window.L_m, state.window.AL_a, state.window.AL_m});
  const auto manifest = checkpoint_manifest(state.model);
  const auto tensors = payload(copy, settings, progress);
  if (tensors.size() != manifest.size()) {
    throw ManifestMismatchError("shape manifest mismatch: optimizer state does not mirror the model");
  }

  io::Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(manifest.size()));
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (tensors[i]->shape != manifest[i].shape) {
      throw ManifestMismatchError("shape manifest mismatch: " + describe(manifest[i]) + " vs " +
                                  to_string(tensors[i]->shape));
    }
    w.u32(static_cast<std::uint32_t>(manifest[i].name.size()));
    w.bytes(manifest[i].name);
    w.u32(static_cast<std::uint32_t>(manifest[i].shape.size()));
    for (auto e : manifest[i].shape) w.u32(static_cast<std::uint32_t>(e));
  }
  for (const Tensor* t : tensors) {
    for (double v : t->data) w.f64(v);
  }
  io::write_file(path.string(), w.buffer());
}

TrainState load_checkpoint(const std::filesystem::path& path, const ModelDims& expected) {
  io::Reader r(io::read_file(path.string()));
  const std::vector<ManifestEntry> stored = read_header(r, path);

  TrainState state;
  state.model = init_params(0, expected);
  state.optimizer = make_optimizer_state(state.model);
  const auto manifest = checkpoint_manifest(state.model);
  if (stored != manifest) {
    std::size_t i = 0;
    while (i < stored.size() && i < manifest.size() && stored[i] == manifest[i]) ++i;
    const std::string have = i < stored.size() ? describe(stored[i]) : "<end>";
    const std::string want = i < manifest.size() ? describe(manifest[i]) : "<end>";
    throw ManifestMismatchError("shape manifest mismatch at entry " + std::to_string(i) + ": checkpoint has " +
                                have + ", configuration expects " + want);
  }

  Tensor settings({3});
  Tensor progress({7});
  for (Tensor* t : payload(state, settings, progress)) {
    for (auto& v : t->data) v = r.f64();
  }
  if (r.remaining() != 0) throw FormatError("checkpoint '" + path.string() + "' has trailing bytes");

  const auto mode = static_cast<int>(settings[0]);
  if (mode < 0 || mode > static_cast<int>(FusionMode::none)) throw FormatError("checkpoint: invalid fusion mode");
  state.model.fusion_mode = static_cast<FusionMode>(mode);
  state.model.score_weights = {settings[1], settings[2]};
  state.stage = progress[0] == 0.0 ? Stage::pretrain : Stage::finetune;
  state.iteration = static_cast<std::size_t>(progress[1]);
  state.window_count = static_cast<std::size_t>(progress[2]);
  state.window = {progress[3], progress[4], progress[5], progress[6]};
  return state;
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  // Read the manifest once to learn the dimensions, then load strictly.
  io::Reader r(io::read_file(path.string()));
  const std::vector<ManifestEntry> stored = read_header(r, path);
  return load_checkpoint(path, infer_dims(stored));
}

}  // namespace cmmp
