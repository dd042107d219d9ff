#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "socialego/body_model.hpp"
#include "socialego/conditioning.hpp"

namespace socialego {

struct EpisodeMetadata {
  std::uint64_t seed = 0;
  double coupling = 0.0;
  std::string scenario;
  std::string room;
  double room_width = 0.0;  // meters; the room is a square of this side
};

// Paired wearer / interactee motion in a scene. Coordinates are meters with
// the origin at the wearer's head at frame 0 and room-aligned axes (y up).
struct InteractionEpisode {
  PoseSequence wearer;
  PoseSequence interactee;
  ScenePointCloud scene;
  EpisodeMetadata meta;

  int frame_count() const { return wearer.frame_count(); }
  bool operator==(const InteractionEpisode& o) const;
};

// Room layouts: "floor-only", "empty-room" (floor and walls), "furnished"
// (floor, walls and 1-3 boxes).
std::vector<std::string> room_scenarios();

// Samples points from a random room of the given layout, centered at the
// origin with the floor at y = 0.
ScenePointCloud generate_scene_pointcloud(const std::string& scenario, int n_points, std::uint64_t seed);

// Interaction presets: "face-to-face-near", "mid-range", "far-averted" and
// "mixed" (random relative placement, used for training sets).
std::vector<std::string> interaction_scenarios();

struct SynthOptions {
  int scene_points = 1024;
  int lag = 10;  // frames by which the wearer's response leads the interactee
  double fps = 30.0;
};

// The interactee follows a smoothed random walk. The wearer blends a social
// response (keeps a room-dependent distance, faces the interactee, mirrors
// its body pose) with weight kappa and an independent walk with 1 - kappa.
// The response at frame t tracks the interactee at frame t + lag.
InteractionEpisode generate_interaction_episode(const std::string& scenario, int frames, double kappa,
                                                std::uint64_t seed, const SynthOptions& options = {},
                                                const BodyModel& body = BodyModel::humanoid());

// Episodes with seeds child_seed(master_seed, i), generated in parallel.
std::vector<InteractionEpisode> generate_episodes(const std::string& scenario, int count, int frames, double kappa,
                                                  std::uint64_t master_seed, const SynthOptions& options = {},
                                                  const BodyModel& body = BodyModel::humanoid());

// Text header followed by little-endian float32 blocks. Every episode must
// share F, V and N. Throws DatasetError on failure.
void write_dataset(std::span<const InteractionEpisode> episodes, const std::filesystem::path& path);
std::vector<InteractionEpisode> read_dataset(const std::filesystem::path& path);

}  // namespace socialego
