#pragma once

#include "style_erd/quaternion.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace style_erd {

// J x 3 row-major block, one joint per row.
using JointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr int kNoParent = -1;

// Joint tree in topological order (parent[i] < i, parent[0] = kNoParent).
// Offsets are rest-pose bone vectors expressed in the parent frame.
struct Skeleton {
  std::vector<int> parents;
  std::vector<Eigen::Vector3d> offsets;
  std::vector<std::string> names;

  int joint_count() const noexcept { return static_cast<int>(parents.size()); }
  // Throws ShapeError/DomainError on a malformed tree.
  void validate() const;

  bool operator==(const Skeleton& o) const;
};

// World positions; row 0 equals root_translation.
JointMatrix forward_kinematics(const Skeleton& skeleton, std::span<const Quaternion> rotations,
                               const Eigen::Vector3d& root_translation);

// Subtracts row 0 from every row.
JointMatrix root_relative(const JointMatrix& positions);

// v_t = (p_t - p_{t-1}) * fps for t >= 1 and v_0 = v_1.
std::vector<JointMatrix> finite_difference_velocities(std::span<const JointMatrix> positions,
                                                      double fps);

}  // namespace style_erd
