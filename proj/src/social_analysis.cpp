#include "socialego/social_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "socialego/errors.hpp"

namespace socialego {

namespace {

int head_joint(const BodyModel& body) {
  return body.joint_count() > kHead ? static_cast<int>(kHead) : body.joint_count() - 1;
}

int window_frames(const InteractionEpisode& ep, int frames) {
  if (frames < 0) throw InvalidArgument("window length must be >= 0");
  if (frames == 0) return ep.frame_count();
  if (frames > ep.wearer.frame_count() || frames > ep.interactee.frame_count())
    throw InvalidArgument("window longer than the episode");
  return frames;
}

PoseSequence head_window(const PoseSequence& s, int frames) {
  PoseSequence out;
  out.frames = s.frames.topRows(frames);
  out.fps = s.fps;
  return out;
}

double angle_between(const Vec3& a, const Vec3& b) {
  // atan2 form stays accurate near 0 and pi
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace

std::vector<double> root_distance(const PoseSequence& a, const PoseSequence& b) {
  if (a.frame_count() != b.frame_count()) throw InvalidArgument("sequences have different frame counts");
  if (a.width() < 3 || b.width() < 3) throw InvalidArgument("sequences have no translation channels");
  std::vector<double> d(a.frame_count());
  for (int t = 0; t < a.frame_count(); ++t) {
    const Vec3 ra = a.frames.row(t).tail<3>().cast<double>().transpose();
    const Vec3 rb = b.frames.row(t).tail<3>().cast<double>().transpose();
    d[t] = (ra - rb).norm();
  }
  return d;
}

DistanceBand distance_band(double meters) {
  if (meters < 1.0) return DistanceBand::Near;
  if (meters < 2.0) return DistanceBand::Mid;
  return DistanceBand::Far;
}

const char* distance_band_label(DistanceBand band) {
  switch (band) {
    case DistanceBand::Near: return "near";
    case DistanceBand::Mid: return "mid";
    case DistanceBand::Far: return "far";
  }
  return "?";
}

double median_root_distance(const InteractionEpisode& ep, int frames) {
  const int F = window_frames(ep, frames);
  auto d = root_distance(head_window(ep.wearer, F), head_window(ep.interactee, F));
  std::sort(d.begin(), d.end());
  const size_t n = d.size();
  return n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

std::vector<Stratum> stratify_by_distance(std::span<const InteractionEpisode> episodes, int frames) {
  std::vector<Stratum> out{{"near", {}}, {"mid", {}}, {"far", {}}};
  for (size_t i = 0; i < episodes.size(); ++i) {
    const auto band = distance_band(median_root_distance(episodes[i], frames));
    out[static_cast<size_t>(band)].members.push_back(static_cast<int>(i));
  }
  return out;
}

Vec3 gaze_direction(const Mat3& head_rotation) {
  require_rotation(head_rotation);
  return (head_rotation * Vec3::UnitZ()).normalized();
}

Vec3 gaze_direction_from_euler(const Mat3& head_rotation) {
  require_rotation(head_rotation);
  // R = Ry(yaw) Rx(pitch) Rz(roll); R * ez = Ry(yaw) Rx(pitch) ez
  const auto e = matrix_to_euler(head_rotation, EulerOrder::YXZ);
  const double yaw = e.angles[0], pitch = e.angles[1];
  return Vec3(std::sin(yaw) * std::cos(pitch), -std::sin(pitch), std::cos(yaw) * std::cos(pitch));
}

std::vector<bool> mutual_gaze(const PoseSequence& a, const PoseSequence& b, double theta_deg, const BodyModel& body,
                              GazeTest test) {
  if (a.frame_count() != b.frame_count()) throw InvalidArgument("sequences have different frame counts");
  if (!(theta_deg > 0.0 && theta_deg < 180.0)) throw InvalidArgument("gaze threshold must lie in (0, 180) degrees");
  const double theta = theta_deg * std::numbers::pi / 180.0;
  const int head = head_joint(body);
  std::vector<bool> out(a.frame_count());
  for (int t = 0; t < a.frame_count(); ++t) {
    const PoseVector pa = a.frame(t), pb = b.frame(t);
    const Vec3 ga = gaze_direction(global_rotations(pa, body)[head]);
    const Vec3 gb = gaze_direction(global_rotations(pb, body)[head]);
    if (test == GazeTest::GazeVsGaze) {
      out[t] = angle_between(ga, -gb) <= theta;
      continue;
    }
    const Vec3 ab = pose_translation(pb) - pose_translation(pa);
    if (ab.norm() < 1e-9) {
      out[t] = false;
      continue;
    }
    out[t] = angle_between(ga, ab) <= theta && angle_between(gb, -ab) <= theta;
  }
  return out;
}

double mutual_gaze_fraction(const PoseSequence& a, const PoseSequence& b, double theta_deg, const BodyModel& body,
                            GazeTest test) {
  const auto flags = mutual_gaze(a, b, theta_deg, body, test);
  if (flags.empty()) return 0.0;
  return static_cast<double>(std::count(flags.begin(), flags.end(), true)) / static_cast<double>(flags.size());
}

std::vector<Stratum> stratify_by_gaze(std::span<const InteractionEpisode> episodes, double theta_deg, int frames,
                                      const BodyModel& body, GazeTest test) {
  std::vector<Stratum> out{{"mutual", {}}, {"non-mutual", {}}};
  for (size_t i = 0; i < episodes.size(); ++i) {
    const int F = window_frames(episodes[i], frames);
    const double frac =
        mutual_gaze_fraction(head_window(episodes[i].wearer, F), head_window(episodes[i].interactee, F), theta_deg,
                             body, test);
    out[frac >= 0.5 ? 0 : 1].members.push_back(static_cast<int>(i));
  }
  return out;
}

PoseSequence future_shift(const PoseSequence& recording, int offset, int frames, int start) {
  if (offset < 0 || start < 0 || frames < 1) throw InvalidArgument("invalid window for future_shift");
  if (static_cast<long long>(start) + offset + frames > recording.frame_count())
    throw InvalidArgument("recording has " + std::to_string(recording.frame_count()) + " frames, window needs " +
                          std::to_string(start + offset + frames));
  PoseSequence out;
  out.frames = recording.frames.middleRows(start + offset, frames);
  out.fps = recording.fps;
  return out;
}

DenoiserExample episode_window(const InteractionEpisode& ep, int frames, int offset) {
  return {future_shift(ep.wearer, 0, frames), future_shift(ep.interactee, offset, frames), ep.scene};
}

std::vector<DenoiserExample> episode_windows(std::span<const InteractionEpisode> episodes, int frames, int offset) {
  std::vector<DenoiserExample> out;
  out.reserve(episodes.size());
  for (const auto& ep : episodes) out.push_back(episode_window(ep, frames, offset));
  return out;
}

}  // namespace socialego
