#include "style_erd/quaternion.hpp"

#include "style_erd/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace style_erd {

Quaternion Quaternion::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d u = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), u.x() * s, u.y() * s, u.z() * s};
}

double Quaternion::norm() const { return std::sqrt(dot(*this)); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n == 0.0) throw DomainError("cannot normalize a zero quaternion");
  return {w / n, x / n, y / n, z / n};
}

bool Quaternion::is_unit(double tol) const { return std::fabs(norm() - 1.0) <= tol; }

Eigen::Vector3d Quaternion::rotate(const Eigen::Vector3d& v) const {
  const Eigen::Vector3d u(x, y, z);
  const Eigen::Vector3d t = 2.0 * u.cross(v);
  return v + w * t + u.cross(t);
}

Eigen::Matrix3d Quaternion::to_matrix() const {
  Eigen::Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

Quaternion Quaternion::from_matrix(const Eigen::Matrix3d& m) {
  // Shepperd's method: pivot on the largest diagonal term.
  const double trace = m.trace();
  Quaternion q;
  if (trace > 0.0) {
    const double s = 0.5 / std::sqrt(trace + 1.0);
    q = {0.25 / s, (m(2, 1) - m(1, 2)) * s, (m(0, 2) - m(2, 0)) * s, (m(1, 0) - m(0, 1)) * s};
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s};
  } else if (m(1, 1) > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s};
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s};
  }
  return q.normalized();
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

void require_unit(const Quaternion& q, const std::string& what) {
  if (!q.is_unit()) {
    std::ostringstream os;
    os << what << " is not unit-norm: (" << q.w << ", " << q.x << ", " << q.y << ", " << q.z
       << "), norm " << q.norm();
    throw DomainError(os.str());
  }
}

double quat_angle(const Quaternion& q1, const Quaternion& q2) {
  require_unit(q1, "first quaternion");
  require_unit(q2, "second quaternion");
  return std::acos(std::clamp(std::fabs(q1.dot(q2)), -1.0, 1.0));
}

}  // namespace style_erd
