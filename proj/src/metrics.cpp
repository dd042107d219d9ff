#include "socialego/metrics.hpp"

#include <cmath>
#include <vector>

#include "socialego/errors.hpp"

namespace socialego {

namespace {

void check_tracks(const JointTrack& a, const JointTrack& b) {
  if (a.frames != b.frames || a.joints != b.joints || a.xyz.size() != b.xyz.size())
    throw InvalidArgument("joint tracks have different shapes");
  if (a.frames < 1 || a.joints < 1) throw InvalidArgument("joint tracks are empty");
}

// Per-frame partial sums are written by index and added up in order, so the
// result does not depend on the thread count.
double ordered_sum(const std::vector<double>& parts) {
  double s = 0.0;
  for (double v : parts) s += v;
  return s;
}

}  // namespace

double mpjpe(const JointTrack& pred, const JointTrack& gt) {
  check_tracks(pred, gt);
  const int T = pred.frames, J = pred.joints;
  std::vector<double> per_frame(T, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) {
    double s = 0.0;
    for (int j = 0; j < J; ++j) {
      const double* p = pred.at(t, j);
      const double* g = gt.at(t, j);
      const double dx = p[0] - g[0], dy = p[1] - g[1], dz = p[2] - g[2];
      s += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    per_frame[t] = s;
  }
  return ordered_sum(per_frame) / (static_cast<double>(T) * J) * 1000.0;
}

double orientation_error(std::span<const Mat3> pred, std::span<const Mat3> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("rotation sequences have different lengths");
  if (pred.empty()) throw InvalidArgument("rotation sequences are empty");
  for (size_t i = 0; i < pred.size(); ++i) {
    require_rotation(pred[i]);
    require_rotation(gt[i]);
  }
  const int T = static_cast<int>(pred.size());
  std::vector<double> per_frame(T, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t)
    per_frame[t] = (pred[t] * gt[t].transpose() - Mat3::Identity()).norm();
  return ordered_sum(per_frame) / T;
}

double translation_error(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("trajectories have different lengths");
  if (pred.empty()) throw InvalidArgument("trajectories are empty");
  const int T = static_cast<int>(pred.size());
  std::vector<double> per_frame(T, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) per_frame[t] = (pred[t] - gt[t]).norm();
  return ordered_sum(per_frame) / T * 1000.0;
}

double acceleration_error(const JointTrack& pred, const JointTrack& gt, double fps) {
  check_tracks(pred, gt);
  if (pred.frames < 3) throw InvalidArgument("acceleration error needs at least 3 frames");
  if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
  const int T = pred.frames, J = pred.joints;
  std::vector<double> per_frame(T - 2, 0.0);
#pragma omp parallel for schedule(static)
  for (int t = 1; t < T - 1; ++t) {
    double s = 0.0;
    for (int j = 0; j < J; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double ap = pred.at(t + 1, j)[c] - 2.0 * pred.at(t, j)[c] + pred.at(t - 1, j)[c];
        const double ag = gt.at(t + 1, j)[c] - 2.0 * gt.at(t, j)[c] + gt.at(t - 1, j)[c];
        d2 += (ap - ag) * (ap - ag);
      }
      s += std::sqrt(d2);
    }
    per_frame[t - 1] = s;
  }
  return ordered_sum(per_frame) / (static_cast<double>(T - 2) * J) * fps * fps * 1000.0;
}

MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt, const BodyModel& body) {
  if (pred.frame_count() != gt.frame_count() || pred.width() != gt.width())
    throw InvalidArgument("predicted and ground-truth sequences have different shapes");
  const JointTrack jp = sequence_joints(pred, body);
  const JointTrack jg = sequence_joints(gt, body);
  const auto rp = root_rotations(pred), rg = root_rotations(gt);
  const auto tp = root_trajectory(pred), tg = root_trajectory(gt);
  MetricsReport r;
  r.mpjpe = mpjpe(jp, jg);
  r.orientation_error = orientation_error(rp, rg);
  r.translation_error = translation_error(tp, tg);
  r.acceleration_error = gt.frame_count() >= 3 ? acceleration_error(jp, jg, gt.fps) : 0.0;
  r.frame_count = gt.frame_count();
  r.joint_count = body.joint_count();
  return r;
}

}  // namespace socialego
