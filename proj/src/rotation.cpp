#include "socialego/rotation.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "socialego/errors.hpp"

namespace socialego {

namespace {

std::array<int, 3> axes_of(EulerOrder order) {
  switch (order) {
    case EulerOrder::ZYX: return {2, 1, 0};
    case EulerOrder::ZXY: return {2, 0, 1};
    case EulerOrder::YXZ: return {1, 0, 2};
    case EulerOrder::YZX: return {1, 2, 0};
    case EulerOrder::XYZ: return {0, 1, 2};
    case EulerOrder::XZY: return {0, 2, 1};
  }
  return {2, 1, 0};
}

Mat3 rotation_about(int axis, double angle) {
  switch (axis) {
    case 0: return rotation_x(angle);
    case 1: return rotation_y(angle);
    default: return rotation_z(angle);
  }
}

}  // namespace

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

void require_rotation(const Mat3& R, double tol) {
  if (!is_rotation(R, tol)) throw InvalidArgument("matrix is not a rotation");
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Mat3 axis_angle_to_matrix(const Vec3& aa) {
  if (!aa.allFinite()) throw InvalidArgument("axis-angle contains non-finite values");
  const double theta = aa.norm();
  if (theta < kSmallAngle) return Mat3::Identity() + skew(aa);
  const Mat3 K = skew(aa / theta);
  return Mat3::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * K * K;
}

Vec3 matrix_to_axis_angle(const Mat3& R) {
  require_rotation(R, 1e-4);
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::acos(c);
  const Vec3 vee(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (theta < kSmallAngle) return 0.5 * vee;
  if (theta < std::numbers::pi - 1e-4) return vee * (theta / (2.0 * std::sin(theta)));

  // Near pi the antisymmetric part vanishes; read the axis from R + I = 2 a a^T
  // (plus a small antisymmetric correction we use only for the sign).
  const Mat3 S = 0.5 * (R + R.transpose()) + Mat3::Identity() * (-c);
  int k = 0;
  S.diagonal().maxCoeff(&k);
  Vec3 axis = S.col(k) / std::sqrt(std::max(S(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(vee) < 0.0) axis = -axis;
  return axis * theta;
}

std::array<Mat3, 3> axis_angle_jacobian(const Vec3& aa) {
  std::array<Mat3, 3> d;
  const double theta2 = aa.squaredNorm();
  if (std::sqrt(theta2) < kSmallAngle) {
    for (int i = 0; i < 3; ++i) d[i] = skew(Vec3::Unit(i));
    return d;
  }
  // dR/dv_i = (v_i [v]x + [v x ((I - R) e_i)]x) R / |v|^2
  const Mat3 R = axis_angle_to_matrix(aa);
  const Mat3 I_minus_R = Mat3::Identity() - R;
  for (int i = 0; i < 3; ++i) {
    const Vec3 w = aa.cross(I_minus_R.col(i));
    d[i] = (aa[i] * skew(aa) + skew(w)) * R / theta2;
  }
  return d;
}

Mat3 rotation_x(double a) {
  Mat3 R;
  R << 1, 0, 0,
       0, std::cos(a), -std::sin(a),
       0, std::sin(a), std::cos(a);
  return R;
}

Mat3 rotation_y(double a) {
  Mat3 R;
  R << std::cos(a), 0, std::sin(a),
       0, 1, 0,
       -std::sin(a), 0, std::cos(a);
  return R;
}

Mat3 rotation_z(double a) {
  Mat3 R;
  R << std::cos(a), -std::sin(a), 0,
       std::sin(a), std::cos(a), 0,
       0, 0, 1;
  return R;
}

EulerAngles matrix_to_euler(const Mat3& R, EulerOrder order) {
  require_rotation(R, 1e-4);
  const auto [i, j, k] = axes_of(order);
  // +1 for cyclic axis sequences (x->y->z), -1 otherwise.
  const bool cyclic = (j == (i + 1) % 3);
  const double s = cyclic ? 1.0 : -1.0;

  EulerAngles out;
  const double sin_mid = std::clamp(s * R(i, k), -1.0, 1.0);
  out.angles[1] = std::asin(sin_mid);
  if (std::abs(out.angles[1]) > std::numbers::pi / 2 - 1e-3) {
    // Only first + third is observable; report third = 0.
    out.gimbal_locked = true;
    out.angles[2] = 0.0;
    // R * R_j(mid)^T = R_i(first)
    const Mat3 first = R * rotation_about(j, out.angles[1]).transpose();
    out.angles[0] = std::atan2(s * first(k, j), first(j, j));
    return out;
  }
  out.angles[0] = std::atan2(-s * R(j, k), R(k, k));
  out.angles[2] = std::atan2(-s * R(i, j), R(i, i));
  return out;
}

Mat3 euler_to_matrix(const std::array<double, 3>& angles, EulerOrder order) {
  const auto [i, j, k] = axes_of(order);
  return rotation_about(i, angles[0]) * rotation_about(j, angles[1]) * rotation_about(k, angles[2]);
}

}  // namespace socialego
