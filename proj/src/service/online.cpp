#include "style_erd/service/online.hpp"

#include "style_erd/errors.hpp"

namespace style_erd::service {

OnlineKinematics::OnlineKinematics(Skeleton skeleton, double fps)
    : skeleton_(std::move(skeleton)), fps_(fps) {
  skeleton_.validate();
  if (!(fps_ > 0.0)) throw DomainError("stream fps must be positive");
}

MotionFrame OnlineKinematics::next(std::vector<Quaternion> rotations, const Eigen::Vector3d& root,
                                   int step) {
  if (static_cast<int>(rotations.size()) != skeleton_.joint_count()) {
    throw ShapeError("frame has " + std::to_string(rotations.size()) + " rotations, skeleton has " +
                     std::to_string(skeleton_.joint_count()) + " joints");
  }
  if (step < 1) throw ContractError("frame step must be positive");
  MotionFrame f;
  f.positions = root_relative(forward_kinematics(skeleton_, rotations, root));
  f.velocities = previous_ ? JointMatrix((f.positions - *previous_) * (fps_ / step))
                           : JointMatrix::Zero(skeleton_.joint_count(), 3);
  f.rotations = std::move(rotations);
  f.root_translation = root;
  previous_ = f.positions;
  return f;
}

std::vector<MotionFrame> online_frames(const Skeleton& skeleton, const std::vector<MotionFrame>& frames,
                                       double fps) {
  OnlineKinematics k(skeleton, fps);
  std::vector<MotionFrame> out;
  out.reserve(frames.size());
  for (const MotionFrame& f : frames) out.push_back(k.next(f.rotations, f.root_translation));
  return out;
}

}  // namespace style_erd::service
