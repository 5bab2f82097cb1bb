#pragma once

#include "style_erd/motion.hpp"
#include "style_erd/skeleton.hpp"

#include <optional>
#include <vector>

namespace style_erd::service {

// Builds network-ready frames from a live stream of local rotations and root
// translations: FK positions (root-relative) and backward-difference
// velocities. The first frame has zero velocity since nothing precedes it.
class OnlineKinematics {
 public:
  OnlineKinematics(Skeleton skeleton, double fps);

  // `step` is the number of sampling intervals since the previous frame
  // (> 1 when the sender skipped frame indices).
  MotionFrame next(std::vector<Quaternion> rotations, const Eigen::Vector3d& root, int step = 1);
  void reset() { previous_.reset(); }

  const Skeleton& skeleton() const noexcept { return skeleton_; }
  double fps() const noexcept { return fps_; }

 private:
  Skeleton skeleton_;
  double fps_;
  std::optional<JointMatrix> previous_;
};

// What a stream of these frames looks like to the service, as one sequence.
std::vector<MotionFrame> online_frames(const Skeleton& skeleton, const std::vector<MotionFrame>& frames,
                                       double fps);

}  // namespace style_erd::service
