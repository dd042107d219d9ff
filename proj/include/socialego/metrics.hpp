#pragma once

#include <span>

#include "socialego/body_model.hpp"

namespace socialego {

struct MetricsReport {
  double mpjpe = 0.0;              // mm
  double orientation_error = 0.0;  // Frobenius norm, dimensionless
  double translation_error = 0.0;  // mm
  double acceleration_error = 0.0; // mm / s^2
  int frame_count = 0;
  int joint_count = 0;
};

// Mean Euclidean joint distance in mm. Shapes must match.
double mpjpe(const JointTrack& pred, const JointTrack& gt);

// Mean over frames of |A_pred A_gt^T - I|_F. Inputs must be rotations.
double orientation_error(std::span<const Mat3> pred, std::span<const Mat3> gt);

// Mean Euclidean root distance in mm.
double translation_error(std::span<const Vec3> pred, std::span<const Vec3> gt);

// Second differences p[t+1] - 2 p[t] + p[t-1], scaled by fps^2, mean distance in mm/s^2.
// Requires T >= 3.
double acceleration_error(const JointTrack& pred, const JointTrack& gt, double fps);

// All four metrics for a predicted sequence against ground truth. The
// orientation reference is the root joint.
MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt, const BodyModel& body);

}  // namespace socialego
