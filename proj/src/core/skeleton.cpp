#include "style_erd/skeleton.hpp"

#include "style_erd/errors.hpp"

#include <cmath>

namespace style_erd {

void Skeleton::validate() const {
  const int j = joint_count();
  if (j < 2) throw ShapeError("skeleton needs at least 2 joints, got " + std::to_string(j));
  if (static_cast<int>(offsets.size()) != j) {
    throw ShapeError("skeleton has " + std::to_string(j) + " parents but " +
                     std::to_string(offsets.size()) + " offsets");
  }
  if (!names.empty() && static_cast<int>(names.size()) != j) {
    throw ShapeError("skeleton joint name count does not match joint count");
  }
  if (parents[0] != kNoParent) throw DomainError("joint 0 must be the root");
  for (int i = 1; i < j; ++i) {
    if (parents[i] < 0 || parents[i] >= i) {
      throw DomainError("joint " + std::to_string(i) + " has parent " +
                        std::to_string(parents[i]) + "; parents must precede children");
    }
    if (!offsets[i].allFinite()) {
      throw DomainError("joint " + std::to_string(i) + " has a non-finite offset");
    }
  }
}

bool Skeleton::operator==(const Skeleton& o) const {
  if (parents != o.parents || names != o.names || offsets.size() != o.offsets.size()) return false;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] != o.offsets[i]) return false;
  }
  return true;
}

JointMatrix forward_kinematics(const Skeleton& skeleton, std::span<const Quaternion> rotations,
                               const Eigen::Vector3d& root_translation) {
  const int j = skeleton.joint_count();
  if (static_cast<int>(rotations.size()) != j) {
    throw ShapeError("forward_kinematics: " + std::to_string(rotations.size()) +
                     " rotations for " + std::to_string(j) + " joints");
  }
  std::vector<Quaternion> global(static_cast<std::size_t>(j));
  JointMatrix positions(j, 3);
  for (int i = 0; i < j; ++i) {
    require_unit(rotations[i], "rotation of joint " + std::to_string(i));
    const int p = skeleton.parents[i];
    if (p == kNoParent) {
      global[i] = rotations[i];
      positions.row(i) = root_translation.transpose();
    } else {
      global[i] = global[p] * rotations[i];
      positions.row(i) = positions.row(p) + global[p].rotate(skeleton.offsets[i]).transpose();
    }
  }
  return positions;
}

JointMatrix root_relative(const JointMatrix& positions) {
  JointMatrix out = positions;
  if (out.rows() == 0) return out;
  const Eigen::RowVector3d root = positions.row(0);
  out.rowwise() -= root;
  return out;
}

std::vector<JointMatrix> finite_difference_velocities(std::span<const JointMatrix> positions,
                                                      double fps) {
  if (positions.size() < 2) {
    throw ShapeError("finite_difference_velocities needs at least 2 frames, got " +
                     std::to_string(positions.size()));
  }
  std::vector<JointMatrix> v(positions.size());
  for (std::size_t t = 1; t < positions.size(); ++t) {
    if (positions[t].rows() != positions[t - 1].rows()) {
      throw ShapeError("finite_difference_velocities: joint count changes at frame " +
                       std::to_string(t));
    }
    v[t] = (positions[t] - positions[t - 1]) * fps;
  }
  v[0] = v[1];
  return v;
}

}  // namespace style_erd
