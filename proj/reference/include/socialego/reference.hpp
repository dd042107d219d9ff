#pragma once

// Serial scalar implementations of the parallel kernels. They share no math
// code with the main library (rotations go through quaternions, matrices
// are plain arrays) and serve as test oracles and benchmark baselines.

#include <array>
#include <vector>

#include "socialego/body_model.hpp"
#include "socialego/metrics.hpp"

namespace socialego::ref {

using M3 = std::array<double, 9>;  // row-major
using V3 = std::array<double, 3>;

// Axis-angle to rotation matrix via the unit quaternion.
M3 rotation_from_axis_angle(const V3& aa);
M3 matmul(const M3& a, const M3& b);
M3 transpose(const M3& a);

// J joint positions of one pose row (V floats).
std::vector<V3> forward_kinematics(const float* pose, const BodyModel& body);

// Forward kinematics over all frames, one at a time.
JointTrack sequence_joints(const PoseSequence& seq, const BodyModel& body);

double mpjpe(const JointTrack& pred, const JointTrack& gt);
double orientation_error(const std::vector<M3>& pred, const std::vector<M3>& gt);
double translation_error(const std::vector<V3>& pred, const std::vector<V3>& gt);
double acceleration_error(const JointTrack& pred, const JointTrack& gt, double fps);
MetricsReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt, const BodyModel& body);

// Multi-head scaled dot-product attention for one sample: q is nq x d,
// k and v are nk x d, all row-major. Returns nq x d.
std::vector<double> attention(const std::vector<double>& q, const std::vector<double>& k,
                              const std::vector<double>& v, int nq, int nk, int d, int heads);

}  // namespace socialego::ref
