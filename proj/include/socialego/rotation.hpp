#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>

namespace socialego {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Axis-angle vectors below this norm take the first-order branch.
inline constexpr double kSmallAngle = 1e-8;

// True when R is orthonormal with det +1, both within tol.
bool is_rotation(const Mat3& R, double tol = 1e-6);

// Throws InvalidArgument when R is not a rotation within tol.
void require_rotation(const Mat3& R, double tol = 1e-6);

Mat3 skew(const Vec3& v);

// Rodrigues formula. Identity plus first-order term for |aa| < kSmallAngle.
Mat3 axis_angle_to_matrix(const Vec3& aa);

// Angle in [0, pi]. At exactly pi the axis sign is arbitrary.
// Rejects inputs that are not rotations within 1e-4.
Vec3 matrix_to_axis_angle(const Mat3& R);

// Partial derivatives dR/daa_i of the Rodrigues map, i = 0..2.
std::array<Mat3, 3> axis_angle_jacobian(const Vec3& aa);

Mat3 rotation_x(double angle);
Mat3 rotation_y(double angle);
Mat3 rotation_z(double angle);

// Tait-Bryan orders. The three angles are applied as
// R = R_first(a0) * R_second(a1) * R_third(a2).
enum class EulerOrder { ZYX, ZXY, YXZ, YZX, XYZ, XZY };

struct EulerAngles {
  std::array<double, 3> angles{};  // in the order named by EulerOrder
  bool gimbal_locked = false;      // middle angle within 1e-3 of +-pi/2; third angle forced to 0
};

EulerAngles matrix_to_euler(const Mat3& R, EulerOrder order = EulerOrder::ZYX);
Mat3 euler_to_matrix(const std::array<double, 3>& angles, EulerOrder order = EulerOrder::ZYX);

}  // namespace socialego
