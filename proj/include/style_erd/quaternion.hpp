#pragma once

#include <Eigen/Core>

#include <string>

namespace style_erd {

inline constexpr double kUnitTolerance = 1e-6;

// (w, x, y, z) with w the scalar part. Storage accepts any values; rotation
// operations check unit norm.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle);

  double norm() const;
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion operator-() const { return {-w, -x, -y, -z}; }
  // Same rotation on the w >= 0 hemisphere.
  Quaternion canonical() const { return w < 0.0 ? -*this : *this; }
  bool is_unit(double tol = kUnitTolerance) const;

  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const;
  Eigen::Matrix3d to_matrix() const;
  static Quaternion from_matrix(const Eigen::Matrix3d& m);
};

Quaternion operator*(const Quaternion& a, const Quaternion& b);

// Throws DomainError naming `what` when q is not unit-norm within tolerance.
void require_unit(const Quaternion& q, const std::string& what);

// Rotation-aware distance arccos(|q1 . q2|) in [0, pi/2]; invariant to the
// sign of either argument.
double quat_angle(const Quaternion& q1, const Quaternion& q2);

}  // namespace style_erd
