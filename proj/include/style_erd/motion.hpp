#pragma once

#include "style_erd/skeleton.hpp"

#include <span>
#include <string>
#include <vector>

namespace style_erd {

// One timestep. Positions are root-relative; velocities are in length units
// per second; root_translation is carried for output only.
struct MotionFrame {
  std::vector<Quaternion> rotations;
  JointMatrix positions;
  JointMatrix velocities;
  Eigen::Vector3d root_translation = Eigen::Vector3d::Zero();

  int joint_count() const noexcept { return static_cast<int>(rotations.size()); }
  // Unit rotations, zero root row, consistent joint counts.
  void validate() const;
};

// Index into a fixed label set with one-hot encoding.
template <typename Tag>
struct Label {
  int index = 0;
  int count = 1;

  Label() = default;
  Label(int index_, int count_);

  std::vector<double> one_hot() const;
  bool operator==(const Label& o) const { return index == o.index && count == o.count; }
};

using StyleLabel = Label<struct StyleTag>;
using ContentLabel = Label<struct ContentTag>;

inline constexpr int kNeutralStyle = 0;

// Feature vector of length 10J laid out as [rotations (w,x,y,z per joint),
// positions (x,y,z per joint), velocities (x,y,z per joint)].
std::vector<double> frame_features(const MotionFrame& frame);
void frame_features_into(const MotionFrame& frame, std::span<double> out);
// Inverse of frame_features; quaternions are renormalized.
MotionFrame frame_from_features(std::span<const double> features, int joint_count);

// Builds frames from per-frame local rotations and root translations:
// positions are FK-derived then root-relativized, velocities by finite
// differences (a single frame gets zero velocity).
std::vector<MotionFrame> assemble_frames(const Skeleton& skeleton,
                                         const std::vector<std::vector<Quaternion>>& rotations,
                                         const std::vector<Eigen::Vector3d>& roots, double fps);

}  // namespace style_erd
