#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "socialego/conditioning.hpp"
#include "socialego/config.hpp"
#include "socialego/diffusion.hpp"
#include "socialego/vae.hpp"

namespace socialego {

inline constexpr int kCheckpointVersion = 1;

// Text header (kind, version, seed, config snapshot, model metadata) plus a
// little-endian float32 blob. The hash covers the snapshot, the metadata
// and the blob.
struct Checkpoint {
  using Pairs = std::vector<std::pair<std::string, std::string>>;

  std::string kind;  // "vae", "denoiser" or "scene-encoder"
  int version = kCheckpointVersion;
  std::uint64_t seed = 0;
  std::string software;
  Pairs config;
  Pairs meta;
  std::vector<float> blob;

  std::string content_hash() const;
  const std::string& meta_value(const std::string& key) const;  // throws CheckpointError if absent
  bool operator==(const Checkpoint&) const = default;
};

// Throws CheckpointError (Io) when the file cannot be written.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws CheckpointError: Io, CorruptHeader, Truncated, HashMismatch,
// VersionSkew, or WrongKind when expected_kind is non-empty and differs.
Checkpoint read_checkpoint(const std::filesystem::path& path, const std::string& expected_kind = "");

Checkpoint make_checkpoint(const VaeModel& model, const ExperimentConfig& config, std::uint64_t seed);
Checkpoint make_checkpoint(const DenoiserModel& model, const ExperimentConfig& config, std::uint64_t seed,
                           int condition_offset, const FreezeReport& freeze);
Checkpoint make_checkpoint(const SceneEncoder& encoder, const ExperimentConfig& config, std::uint64_t seed);

VaeModel vae_from_checkpoint(const Checkpoint& ckpt);
DenoiserModel denoiser_from_checkpoint(const Checkpoint& ckpt);
SceneEncoder scene_encoder_from_checkpoint(const Checkpoint& ckpt);

// Config snapshot stored in a checkpoint.
ExperimentConfig checkpoint_config(const Checkpoint& ckpt);

// Build version string embedded in every artifact.
const char* software_version();

}  // namespace socialego
