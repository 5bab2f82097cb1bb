#include "style_erd/model/kinematics.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"

#include <Eigen/Geometry>

namespace style_erd::model {

namespace {

using nn::Tensor;
using nn::Var;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

Vec4 qmul(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

// a * b = left(a) b = right(b) a.
Mat4 left(const Vec4& a) {
  Mat4 m;
  m << a[0], -a[1], -a[2], -a[3],
       a[1], a[0], -a[3], a[2],
       a[2], a[3], a[0], -a[1],
       a[3], -a[2], a[1], a[0];
  return m;
}

Mat4 right(const Vec4& b) {
  Mat4 m;
  m << b[0], -b[1], -b[2], -b[3],
       b[1], b[0], b[3], -b[2],
       b[2], -b[3], b[0], b[1],
       b[3], b[2], -b[1], b[0];
  return m;
}

// v + w t + u x t with t = 2 u x v; exact rotation for unit q.
Eigen::Vector3d rotate(const Vec4& q, const Eigen::Vector3d& v) {
  const Eigen::Vector3d u(q[1], q[2], q[3]);
  const Eigen::Vector3d t = 2.0 * u.cross(v);
  return v + q[0] * t + u.cross(t);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Transposed Jacobian of rotate(q, v) with respect to q, applied to g.
Vec4 rotate_vjp(const Vec4& q, const Eigen::Vector3d& v, const Eigen::Vector3d& g) {
  const double w = q[0];
  const Eigen::Vector3d u(q[1], q[2], q[3]);
  const Eigen::Vector3d dw = 2.0 * u.cross(v);
  const Eigen::Matrix3d du = -2.0 * w * skew(v) + 2.0 * u.dot(v) * Eigen::Matrix3d::Identity() +
                             2.0 * u * v.transpose() - 4.0 * v * u.transpose();
  Vec4 out;
  out[0] = dw.dot(g);
  out.tail<3>() = du.transpose() * g;
  return out;
}

}  // namespace

Var normalize_quaternions(const Var& q) {
  if (q.value().rank() != 2 || q.dim(1) % 4 != 0) {
    throw ShapeError("normalize_quaternions: expected [M, 4J], got " + nn::shape_string(q.shape()));
  }
  Var norm2 = nn::group_sum(nn::mul(q, q), 4);
  Var inv = nn::pow_scalar(nn::add_scalar(norm2, 1e-12), -0.5);
  Var unit = nn::mul(q, nn::group_expand(inv, 4));
  // Hemisphere flip: a piecewise-constant sign per joint.
  Tensor sign(q.shape(), 1.0);
  const Tensor& v = unit.value();
  const int rows = q.dim(0);
  const int width = q.dim(1);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < width; j += 4) {
      if (v.at(r, j) < 0.0) {
        for (int k = 0; k < 4; ++k) sign.at(r, j + k) = -1.0;
      }
    }
  }
  return nn::mul_const(unit, sign);
}

Var fk_positions(const Var& q, const Skeleton& skeleton) {
  const int joints = skeleton.joint_count();
  if (q.value().rank() != 2 || q.dim(1) != 4 * joints) {
    throw ShapeError("fk_positions: rotations " + nn::shape_string(q.shape()) + " for " +
                     std::to_string(joints) + " joints");
  }
  const int rows = q.dim(0);
  Tensor out({rows, 3 * joints});
  const Tensor& qv = q.value();
  std::vector<Vec4> global(static_cast<std::size_t>(joints));
  std::vector<Eigen::Vector3d> pos(static_cast<std::size_t>(joints));
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < joints; ++j) {
      const Vec4 local(qv.at(r, 4 * j), qv.at(r, 4 * j + 1), qv.at(r, 4 * j + 2), qv.at(r, 4 * j + 3));
      const int p = skeleton.parents[j];
      if (p < 0) {
        global[j] = local;
        pos[j].setZero();
      } else {
        global[j] = qmul(global[p], local);
        pos[j] = pos[p] + rotate(global[p], skeleton.offsets[j]);
      }
      for (int k = 0; k < 3; ++k) out.at(r, 3 * j + k) = pos[j][k];
    }
  }
  const Skeleton sk = skeleton;
  return nn::make_result(
      std::move(out), {q},
      [sk](const Var& self, const Var& grad) {
        const Var& input = self.node()->inputs[0];
        const Tensor& qv = input.value();
        const Tensor& g = grad.value();
        const int rows = qv.dim(0);
        const int joints = sk.joint_count();
        Tensor dq(qv.shape());
        std::vector<Vec4> local(static_cast<std::size_t>(joints));
        std::vector<Vec4> global(static_cast<std::size_t>(joints));
        std::vector<Vec4> g_global(static_cast<std::size_t>(joints));
        std::vector<Eigen::Vector3d> g_pos(static_cast<std::size_t>(joints));
        for (int r = 0; r < rows; ++r) {
          for (int j = 0; j < joints; ++j) {
            local[j] = Vec4(qv.at(r, 4 * j), qv.at(r, 4 * j + 1), qv.at(r, 4 * j + 2),
                            qv.at(r, 4 * j + 3));
            const int p = sk.parents[j];
            global[j] = p < 0 ? local[j] : qmul(global[p], local[j]);
            g_global[j].setZero();
            g_pos[j] = Eigen::Vector3d(g.at(r, 3 * j), g.at(r, 3 * j + 1), g.at(r, 3 * j + 2));
          }
          // Children have larger indices, so reverse order sees complete
          // adjoints.
          for (int j = joints - 1; j >= 0; --j) {
            const int p = sk.parents[j];
            Vec4 g_local;
            if (p < 0) {
              g_local = g_global[j];
            } else {
              g_pos[p] += g_pos[j];
              g_global[p] += rotate_vjp(global[p], sk.offsets[j], g_pos[j]);
              g_global[p] += right(local[j]).transpose() * g_global[j];
              g_local = left(global[p]).transpose() * g_global[j];
            }
            for (int k = 0; k < 4; ++k) dq.at(r, 4 * j + k) = g_local[k];
          }
        }
        return std::vector<Var>{Var(std::move(dq))};
      },
      "fk_positions", /*first_order_only=*/true);
}

}  // namespace style_erd::model
