#include "socialego/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "socialego/errors.hpp"
#include "socialego/sha256.hpp"

#ifndef SOCIALEGO_VERSION
#define SOCIALEGO_VERSION "unknown"
#endif

namespace socialego {

namespace {

constexpr const char* kMagic = "socialego-checkpoint";

CheckpointError error(CheckpointError::Kind kind, const std::string& what) { return {kind, what}; }

std::string header_body(const Checkpoint& c) {
  std::string s;
  for (const auto& [k, v] : c.config) s += "config." + k + ": " + v + "\n";
  for (const auto& [k, v] : c.meta) s += "meta." + k + ": " + v + "\n";
  return s;
}

std::string blob_bytes(const std::vector<float>& blob) {
  std::string out;
  out.reserve(blob.size() * 4);
  for (float f : blob) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  return out;
}

int meta_int(const Checkpoint& c, const std::string& key) {
  const std::string& v = c.meta_value(key);
  try {
    size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw error(CheckpointError::Kind::CorruptHeader, "metadata '" + key + "' is not an integer");
  }
}

bool meta_bool(const Checkpoint& c, const std::string& key) {
  const std::string& v = c.meta_value(key);
  if (v == "true") return true;
  if (v == "false") return false;
  throw error(CheckpointError::Kind::CorruptHeader, "metadata '" + key + "' is not a boolean");
}

void append(std::vector<float>& blob, const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) blob.push_back(static_cast<float>(v[i]));
}

Eigen::RowVectorXd take(const std::vector<float>& blob, size_t& pos, Eigen::Index n) {
  if (pos + static_cast<size_t>(n) > blob.size())
    throw error(CheckpointError::Kind::CorruptHeader, "parameter blob is shorter than the model");
  Eigen::RowVectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(blob[pos++]);
  return v;
}

void load_params(nn::ParameterStore& store, const std::vector<float>& blob, size_t& pos) {
  const size_t n = store.scalar_count();
  if (pos + n > blob.size()) throw error(CheckpointError::Kind::CorruptHeader, "parameter blob is shorter than the model");
  store.from_floats(std::span<const float>(blob).subspan(pos, n));
  pos += n;
}

void require_consumed(const std::vector<float>& blob, size_t pos) {
  if (pos != blob.size()) throw error(CheckpointError::Kind::CorruptHeader, "parameter blob is longer than the model");
}

}  // namespace

const char* software_version() { return SOCIALEGO_VERSION; }

std::string Checkpoint::content_hash() const { return sha256_hex(header_body(*this) + blob_bytes(blob)); }

const std::string& Checkpoint::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw error(CheckpointError::Kind::CorruptHeader, "checkpoint is missing metadata '" + key + "'");
}

void write_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ostringstream h;
  h << kMagic << "\n";
  h << "version: " << c.version << "\n";
  h << "kind: " << c.kind << "\n";
  h << "seed: " << c.seed << "\n";
  h << "software: " << c.software << "\n";
  h << "scalars: " << c.blob.size() << "\n";
  h << "sha256: " << c.content_hash() << "\n";
  h << header_body(c);
  h << "end_header\n";
  const std::string out = h.str() + blob_bytes(c.blob);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw error(CheckpointError::Kind::Io, "cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw error(CheckpointError::Kind::Io, "failed writing '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw error(CheckpointError::Kind::Io, "cannot open checkpoint '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto next_line = [&](std::string& line) {
    const size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) return false;
    line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };
  std::string line;
  if (!next_line(line)) {
    if (std::string(kMagic).starts_with(bytes))
      throw error(CheckpointError::Kind::Truncated, "checkpoint ends inside the header");
    throw error(CheckpointError::Kind::CorruptHeader, "not a checkpoint file (bad magic)");
  }
  if (line != kMagic) throw error(CheckpointError::Kind::CorruptHeader, "not a checkpoint file (bad magic)");

  Checkpoint c;
  std::string declared_hash;
  long long scalars = -1;
  bool have_version = false, have_kind = false, ended = false;
  while (next_line(line)) {
    if (line == "end_header") {
      ended = true;
      break;
    }
    const size_t colon = line.find(": ");
    if (colon == std::string::npos)
      throw error(CheckpointError::Kind::CorruptHeader, "malformed header line '" + line + "'");
    const std::string key = line.substr(0, colon), value = line.substr(colon + 2);
    try {
      if (key == "version") {
        size_t used = 0;
        c.version = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        have_version = true;
      } else if (key == "kind") {
        c.kind = value;
        have_kind = true;
      } else if (key == "seed") {
        size_t used = 0;
        c.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } else if (key == "software") {
        c.software = value;
      } else if (key == "scalars") {
        size_t used = 0;
        scalars = std::stoll(value, &used);
        if (used != value.size() || scalars < 0) throw std::invalid_argument(value);
      } else if (key == "sha256") {
        declared_hash = value;
      } else if (key.starts_with("config.")) {
        c.config.emplace_back(key.substr(7), value);
      } else if (key.starts_with("meta.")) {
        c.meta.emplace_back(key.substr(5), value);
      } else {
        throw std::invalid_argument(key);
      }
    } catch (const std::invalid_argument&) {
      throw error(CheckpointError::Kind::CorruptHeader, "bad header field '" + key + "'");
    } catch (const std::out_of_range&) {
      throw error(CheckpointError::Kind::CorruptHeader, "header field '" + key + "' out of range");
    }
  }
  if (!ended) throw error(CheckpointError::Kind::Truncated, "checkpoint ends inside the header");
  if (!have_version || !have_kind || scalars < 0 || declared_hash.empty())
    throw error(CheckpointError::Kind::CorruptHeader, "checkpoint header is missing required fields");
  if (c.version != kCheckpointVersion)
    throw error(CheckpointError::Kind::VersionSkew, "checkpoint format version " + std::to_string(c.version) +
                                                        " is not supported (expected " +
                                                        std::to_string(kCheckpointVersion) + ")");
  if (!expected_kind.empty() && c.kind != expected_kind)
    throw error(CheckpointError::Kind::WrongKind, "expected a " + expected_kind + " checkpoint, got " + c.kind);

  const size_t remaining = bytes.size() - pos;
  if (remaining < static_cast<size_t>(scalars) * 4)
    throw error(CheckpointError::Kind::Truncated, "checkpoint payload is truncated");
  if (remaining > static_cast<size_t>(scalars) * 4)
    throw error(CheckpointError::Kind::CorruptHeader, "checkpoint has trailing bytes after the payload");
  c.blob.resize(static_cast<size_t>(scalars));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (size_t i = 0; i < c.blob.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(p[4 * i]) | (static_cast<std::uint32_t>(p[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(p[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(p[4 * i + 3]) << 24);
    c.blob[i] = std::bit_cast<float>(u);
  }
  if (c.content_hash() != declared_hash)
    throw error(CheckpointError::Kind::HashMismatch, "checkpoint content does not match its hash");
  return c;
}

Checkpoint make_checkpoint(const VaeModel& model, const ExperimentConfig& config, std::uint64_t seed) {
  Checkpoint c;
  c.kind = "vae";
  c.seed = seed;
  c.software = software_version();
  c.config = config.to_pairs();
  const auto& vc = model.config();
  c.meta = {{"frames", std::to_string(vc.frames)},
            {"pose_width", std::to_string(vc.pose_width)},
            {"latent_dim", std::to_string(vc.latent_dim)},
            {"layers", std::to_string(vc.layers)},
            {"heads", std::to_string(vc.heads)},
            {"ff_hidden", std::to_string(vc.ff_hidden)},
            {"body", "humanoid"},
            {"encoder_hash", model.encoder_hash()}};
  c.blob = model.parameters().to_floats();
  append(c.blob, model.feature_mean());
  append(c.blob, model.feature_scale());
  return c;
}

Checkpoint make_checkpoint(const DenoiserModel& model, const ExperimentConfig& config, std::uint64_t seed,
                           int condition_offset, const FreezeReport& freeze) {
  Checkpoint c;
  c.kind = "denoiser";
  c.seed = seed;
  c.software = software_version();
  c.config = config.to_pairs();
  const auto& dc = model.config();
  c.meta = {{"latent_dim", std::to_string(dc.latent_dim)},
            {"layers", std::to_string(dc.layers)},
            {"heads", std::to_string(dc.heads)},
            {"ff_hidden", std::to_string(dc.ff_hidden)},
            {"use_interactee", dc.use_interactee ? "true" : "false"},
            {"use_scene", dc.use_scene ? "true" : "false"},
            {"condition_offset", std::to_string(condition_offset)},
            {"freeze_vae_encoder_before", freeze.vae_encoder_before},
            {"freeze_vae_encoder_after", freeze.vae_encoder_after},
            {"freeze_scene_before", freeze.scene_before},
            {"freeze_scene_after", freeze.scene_after}};
  c.blob = model.parameters().to_floats();
  append(c.blob, model.latent_mean().transpose());
  append(c.blob, model.latent_scale().transpose());
  return c;
}

Checkpoint make_checkpoint(const SceneEncoder& encoder, const ExperimentConfig& config, std::uint64_t seed) {
  Checkpoint c;
  c.kind = "scene-encoder";
  c.seed = seed;
  c.software = software_version();
  c.config = config.to_pairs();
  const auto& sc = encoder.config();
  std::string widths;
  for (size_t i = 0; i < sc.widths.size(); ++i) widths += (i ? "," : "") + std::to_string(sc.widths[i]);
  c.meta = {{"widths", widths},
            {"out_dim", std::to_string(sc.out_dim)},
            {"points", std::to_string(sc.points)},
            {"hash", encoder.hash()}};
  c.blob = encoder.parameters().to_floats();
  return c;
}

VaeModel vae_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "vae") throw error(CheckpointError::Kind::WrongKind, "expected a vae checkpoint, got " + c.kind);
  if (c.meta_value("body") != "humanoid")
    throw error(CheckpointError::Kind::CorruptHeader, "unknown body model '" + c.meta_value("body") + "'");
  VaeConfig vc;
  vc.frames = meta_int(c, "frames");
  vc.pose_width = meta_int(c, "pose_width");
  vc.latent_dim = meta_int(c, "latent_dim");
  vc.layers = meta_int(c, "layers");
  vc.heads = meta_int(c, "heads");
  vc.ff_hidden = meta_int(c, "ff_hidden");
  VaeModel m(vc, BodyModel::humanoid(), 0);
  size_t pos = 0;
  load_params(m.parameters(), c.blob, pos);
  auto mean = take(c.blob, pos, vc.pose_width);
  auto scale = take(c.blob, pos, vc.pose_width);
  require_consumed(c.blob, pos);
  m.set_normalization(std::move(mean), std::move(scale));
  return m;
}

DenoiserModel denoiser_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "denoiser")
    throw error(CheckpointError::Kind::WrongKind, "expected a denoiser checkpoint, got " + c.kind);
  DenoiserConfig dc;
  dc.latent_dim = meta_int(c, "latent_dim");
  dc.layers = meta_int(c, "layers");
  dc.heads = meta_int(c, "heads");
  dc.ff_hidden = meta_int(c, "ff_hidden");
  dc.use_interactee = meta_bool(c, "use_interactee");
  dc.use_scene = meta_bool(c, "use_scene");
  DenoiserModel m(dc, 0);
  size_t pos = 0;
  load_params(m.parameters(), c.blob, pos);
  Eigen::VectorXd mean = take(c.blob, pos, dc.latent_dim).transpose();
  Eigen::VectorXd scale = take(c.blob, pos, dc.latent_dim).transpose();
  require_consumed(c.blob, pos);
  m.set_latent_normalization(std::move(mean), std::move(scale));
  return m;
}

SceneEncoder scene_encoder_from_checkpoint(const Checkpoint& c) {
  if (c.kind != "scene-encoder")
    throw error(CheckpointError::Kind::WrongKind, "expected a scene-encoder checkpoint, got " + c.kind);
  SceneEncoderConfig sc;
  sc.widths.clear();
  std::istringstream ws(c.meta_value("widths"));
  std::string item;
  while (std::getline(ws, item, ',')) {
    try {
      sc.widths.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw error(CheckpointError::Kind::CorruptHeader, "metadata 'widths' is malformed");
    }
  }
  sc.out_dim = meta_int(c, "out_dim");
  sc.points = meta_int(c, "points");
  SceneEncoder e(sc, 0);
  size_t pos = 0;
  load_params(e.parameters(), c.blob, pos);
  require_consumed(c.blob, pos);
  return e;
}

ExperimentConfig checkpoint_config(const Checkpoint& c) {
  std::string text;
  for (const auto& [k, v] : c.config) text += k + ": " + v + "\n";
  return parse_config(text);
}

}  // namespace socialego
