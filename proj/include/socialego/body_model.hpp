#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "socialego/rotation.hpp"

namespace socialego {

inline constexpr int kDefaultJointCount = 24;

// Pose vector layout: [global_orient(3) | body_pose(3*(J-1)) | transl(3)].
constexpr int pose_width_for(int joints) { return 3 * joints + 3; }

// SMPL joint order of the default skeleton.
enum Joint : int {
  kPelvis = 0, kLeftHip, kRightHip, kSpine1, kLeftKnee, kRightKnee, kSpine2,
  kLeftAnkle, kRightAnkle, kSpine3, kLeftFoot, kRightFoot, kNeck, kLeftCollar,
  kRightCollar, kHead, kLeftShoulder, kRightShoulder, kLeftElbow, kRightElbow,
  kLeftWrist, kRightWrist, kLeftHand, kRightHand
};

using PoseMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PoseVector = Eigen::VectorXd;

// F x V pose parameters. Stored as float32 so file round-trips are exact.
struct PoseSequence {
  PoseMatrix frames;
  double fps = 30.0;

  int frame_count() const { return static_cast<int>(frames.rows()); }
  int width() const { return static_cast<int>(frames.cols()); }
  PoseVector frame(int f) const { return frames.row(f).transpose().cast<double>(); }

  // Throws InvalidArgument on F < 1, non-finite values, or fps <= 0.
  void validate() const;

  bool operator==(const PoseSequence& other) const {
    return fps == other.fps && frames.rows() == other.frames.rows() &&
           frames.cols() == other.frames.cols() && frames == other.frames;
  }
};

inline Vec3 pose_global_orient(const PoseVector& p) { return p.segment<3>(0); }
inline Vec3 pose_joint_rotation(const PoseVector& p, int joint) { return p.segment<3>(3 * joint); }
inline Vec3 pose_translation(const PoseVector& p) { return p.tail<3>(); }

// Kinematic tree. Offsets are in the parent frame, meters; Y up, +Z forward,
// +X to the body's left.
struct BodyModel {
  std::vector<int> parents;
  std::vector<Vec3> rest_offsets;

  int joint_count() const { return static_cast<int>(parents.size()); }
  int pose_width() const { return pose_width_for(joint_count()); }

  // Tree rooted at 0, parent < child, finite offsets, zero root offset.
  void validate() const;

  // 24-joint humanoid with SMPL ordering and hand-authored adult
  // proportions. Standing pelvis height is standing_root_height().
  static BodyModel humanoid();

  // Height of the root above the soles in the rest pose.
  double standing_root_height() const;
};

// J x 3 joint positions for one frame.
using Joints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Joints forward_kinematics(const PoseVector& pose, const BodyModel& body);

// Global rotation of every joint for one frame.
std::vector<Mat3> global_rotations(const PoseVector& pose, const BodyModel& body);

// Vector-Jacobian product of forward_kinematics: given dL/djoints returns
// dL/dpose (length V).
PoseVector forward_kinematics_vjp(const PoseVector& pose, const BodyModel& body,
                                  const Joints& grad_joints);

// T x J x 3 joint positions, frame-major.
struct JointTrack {
  int frames = 0;
  int joints = 0;
  std::vector<double> xyz;

  JointTrack() = default;
  JointTrack(int t, int j) : frames(t), joints(j), xyz(static_cast<size_t>(t) * j * 3, 0.0) {}

  double* at(int t, int j) { return xyz.data() + (static_cast<size_t>(t) * joints + j) * 3; }
  const double* at(int t, int j) const { return xyz.data() + (static_cast<size_t>(t) * joints + j) * 3; }
};

// Forward kinematics over every frame. Frames are processed in parallel.
JointTrack sequence_joints(const PoseSequence& seq, const BodyModel& body);

// T x 3 root translations (the transl channel).
std::vector<Vec3> root_trajectory(const PoseSequence& seq);

// Root (global_orient) rotation per frame.
std::vector<Mat3> root_rotations(const PoseSequence& seq);

}  // namespace socialego
