#include "socialego/body_model.hpp"

#include <string>

#include "socialego/errors.hpp"

namespace socialego {

void PoseSequence::validate() const {
  if (frames.rows() < 1) throw InvalidArgument("pose sequence needs at least one frame");
  if (!(fps > 0.0)) throw InvalidArgument("pose sequence fps must be positive");
  if (!frames.allFinite()) throw InvalidArgument("pose sequence contains non-finite values");
}

void BodyModel::validate() const {
  const int J = joint_count();
  if (J < 1) throw InvalidArgument("body model has no joints");
  if (static_cast<int>(rest_offsets.size()) != J)
    throw InvalidArgument("body model offsets/parents size mismatch");
  if (parents[0] != -1) throw InvalidArgument("joint 0 must be the root");
  for (int j = 1; j < J; ++j) {
    if (parents[j] < 0 || parents[j] >= j)
      throw InvalidArgument("joint " + std::to_string(j) + " has invalid parent");
  }
  for (const auto& o : rest_offsets)
    if (!o.allFinite()) throw InvalidArgument("non-finite rest offset");
  if (rest_offsets[0].norm() != 0.0) throw InvalidArgument("root offset must be zero");
}

BodyModel BodyModel::humanoid() {
  BodyModel b;
  b.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  b.rest_offsets = {
      {0.0, 0.0, 0.0},          // pelvis
      {0.06, -0.09, 0.0},       // left hip
      {-0.06, -0.09, 0.0},      // right hip
      {0.0, 0.11, -0.01},       // spine1
      {0.04, -0.38, 0.0},       // left knee
      {-0.04, -0.38, 0.0},      // right knee
      {0.0, 0.14, 0.0},         // spine2
      {0.0, -0.40, -0.04},      // left ankle
      {0.0, -0.40, -0.04},      // right ankle
      {0.0, 0.06, 0.02},        // spine3
      {0.0, -0.05, 0.12},       // left foot
      {0.0, -0.05, 0.12},       // right foot
      {0.0, 0.21, -0.03},       // neck
      {0.08, 0.12, -0.02},      // left collar
      {-0.08, 0.12, -0.02},     // right collar
      {0.0, 0.09, 0.05},        // head
      {0.12, 0.03, -0.01},      // left shoulder
      {-0.12, 0.03, -0.01},     // right shoulder
      {0.26, 0.0, 0.0},         // left elbow
      {-0.26, 0.0, 0.0},        // right elbow
      {0.25, 0.0, 0.0},         // left wrist
      {-0.25, 0.0, 0.0},        // right wrist
      {0.08, 0.0, 0.0},         // left hand
      {-0.08, 0.0, 0.0},        // right hand
  };
  return b;
}

double BodyModel::standing_root_height() const {
  PoseVector rest = PoseVector::Zero(pose_width());
  const Joints j = forward_kinematics(rest, *this);
  return -j.col(1).minCoeff();
}

namespace {

void check_width(const PoseVector& pose, const BodyModel& body) {
  if (pose.size() != body.pose_width())
    throw InvalidArgument("pose length " + std::to_string(pose.size()) + " does not match body width " +
                          std::to_string(body.pose_width()));
}

}  // namespace

std::vector<Mat3> global_rotations(const PoseVector& pose, const BodyModel& body) {
  check_width(pose, body);
  const int J = body.joint_count();
  std::vector<Mat3> G(J);
  G[0] = axis_angle_to_matrix(pose_global_orient(pose));
  for (int j = 1; j < J; ++j) G[j] = G[body.parents[j]] * axis_angle_to_matrix(pose_joint_rotation(pose, j));
  return G;
}

Joints forward_kinematics(const PoseVector& pose, const BodyModel& body) {
  const auto G = global_rotations(pose, body);
  const int J = body.joint_count();
  Joints x(J, 3);
  x.row(0) = pose_translation(pose).transpose();
  for (int j = 1; j < J; ++j) {
    const int p = body.parents[j];
    x.row(j) = x.row(p) + (G[p] * body.rest_offsets[j]).transpose();
  }
  return x;
}

PoseVector forward_kinematics_vjp(const PoseVector& pose, const BodyModel& body, const Joints& grad_joints) {
  check_width(pose, body);
  const int J = body.joint_count();
  if (grad_joints.rows() != J) throw InvalidArgument("joint gradient has wrong row count");

  std::vector<Mat3> R(J), G(J);
  for (int j = 0; j < J; ++j) R[j] = axis_angle_to_matrix(pose.segment<3>(3 * j));
  G[0] = R[0];
  for (int j = 1; j < J; ++j) G[j] = G[body.parents[j]] * R[j];

  std::vector<Vec3> gx(J);
  std::vector<Mat3> gG(J, Mat3::Zero());
  for (int j = 0; j < J; ++j) gx[j] = grad_joints.row(j).transpose();

  PoseVector grad = PoseVector::Zero(pose.size());
  auto accumulate_rotation = [&](int j, const Mat3& gR) {
    const auto dR = axis_angle_jacobian(pose.segment<3>(3 * j));
    for (int i = 0; i < 3; ++i) grad[3 * j + i] += (gR.array() * dR[i].array()).sum();
  };

  // Children carry larger indices, so a reverse sweep sees every child
  // before its parent.
  for (int j = J - 1; j >= 1; --j) {
    const int p = body.parents[j];
    gx[p] += gx[j];
    gG[p] += gx[j] * body.rest_offsets[j].transpose();
    gG[p] += gG[j] * R[j].transpose();
    accumulate_rotation(j, G[p].transpose() * gG[j]);
  }
  accumulate_rotation(0, gG[0]);
  grad.tail<3>() += gx[0];
  return grad;
}

JointTrack sequence_joints(const PoseSequence& seq, const BodyModel& body) {
  if (seq.width() != body.pose_width())
    throw InvalidArgument("sequence width does not match body model");
  if (!seq.frames.allFinite()) throw InvalidArgument("sequence contains non-finite values");
  const int T = seq.frame_count();
  const int J = body.joint_count();
  JointTrack track(T, J);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < T; ++t) {
    const Joints x = forward_kinematics(seq.frame(t), body);
    double* out = track.at(t, 0);
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c) out[3 * j + c] = x(j, c);
  }
  return track;
}

std::vector<Vec3> root_trajectory(const PoseSequence& seq) {
  std::vector<Vec3> r(seq.frame_count());
  for (int t = 0; t < seq.frame_count(); ++t) r[t] = pose_translation(seq.frame(t));
  return r;
}

std::vector<Mat3> root_rotations(const PoseSequence& seq) {
  std::vector<Mat3> r(seq.frame_count());
  for (int t = 0; t < seq.frame_count(); ++t) r[t] = axis_angle_to_matrix(pose_global_orient(seq.frame(t)));
  return r;
}

}  // namespace socialego
