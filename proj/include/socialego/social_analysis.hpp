#pragma once

#include <span>
#include <string>
#include <vector>

#include "socialego/body_model.hpp"
#include "socialego/diffusion.hpp"
#include "socialego/synth_data.hpp"

namespace socialego {

// Per-frame Euclidean distance between the two root translations, meters.
std::vector<double> root_distance(const PoseSequence& a, const PoseSequence& b);

// A labelled partition of a dataset; members holds indices into the input.
struct Stratum {
  std::string label;
  std::vector<int> members;
};

// Distance ranges [0, 1), [1, 2), [2, inf) meters.
enum class DistanceBand { Near, Mid, Far };
DistanceBand distance_band(double meters);
const char* distance_band_label(DistanceBand band);

// Sequence median of root_distance over the first `frames` frames (all when 0).
double median_root_distance(const InteractionEpisode& ep, int frames = 0);

// Strata "near", "mid", "far" by median distance. Always three entries.
std::vector<Stratum> stratify_by_distance(std::span<const InteractionEpisode> episodes, int frames = 0);

// Head rotation applied to the body-forward axis +Z.
Vec3 gaze_direction(const Mat3& head_rotation);

// Same direction recovered from yaw and pitch of a Y-X-Z Euler
// decomposition; roll about the forward axis does not move it.
Vec3 gaze_direction_from_euler(const Mat3& head_rotation);

enum class GazeTest {
  LineOfSight,  // each agent's gaze against the direction to the other
  GazeVsGaze    // angle between one gaze and the reverse of the other
};

// Per-frame mutual-gaze flags. theta in degrees, (0, 180). Frames where the
// roots coincide are never mutual under LineOfSight.
std::vector<bool> mutual_gaze(const PoseSequence& a, const PoseSequence& b, double theta_deg,
                              const BodyModel& body = BodyModel::humanoid(), GazeTest test = GazeTest::LineOfSight);

// Fraction of frames flagged by mutual_gaze.
double mutual_gaze_fraction(const PoseSequence& a, const PoseSequence& b, double theta_deg,
                            const BodyModel& body = BodyModel::humanoid(), GazeTest test = GazeTest::LineOfSight);

// Strata "mutual" (flagged in at least half the frames) and "non-mutual".
std::vector<Stratum> stratify_by_gaze(std::span<const InteractionEpisode> episodes, double theta_deg, int frames = 0,
                                      const BodyModel& body = BodyModel::humanoid(),
                                      GazeTest test = GazeTest::LineOfSight);

// Window [start + offset, start + offset + frames) of a recording.
PoseSequence future_shift(const PoseSequence& recording, int offset, int frames, int start = 0);

// Model inputs for one episode: wearer frames [0, F) and interactee frames
// shifted by offset.
DenoiserExample episode_window(const InteractionEpisode& ep, int frames, int offset = 0);
std::vector<DenoiserExample> episode_windows(std::span<const InteractionEpisode> episodes, int frames, int offset = 0);

}  // namespace socialego
