#include "style_erd/motion.hpp"

#include "style_erd/errors.hpp"

namespace style_erd {

void MotionFrame::validate() const {
  const int j = joint_count();
  if (positions.rows() != j || velocities.rows() != j) {
    throw ShapeError("frame has " + std::to_string(j) + " rotations but " +
                     std::to_string(positions.rows()) + " positions and " +
                     std::to_string(velocities.rows()) + " velocities");
  }
  for (int i = 0; i < j; ++i) require_unit(rotations[i], "rotation of joint " + std::to_string(i));
  if (j > 0 && positions.row(0).norm() > 1e-9) {
    throw DomainError("frame positions are not root-relative");
  }
}

template <typename Tag>
Label<Tag>::Label(int index_, int count_) : index(index_), count(count_) {
  if (count_ <= 0 || index_ < 0 || index_ >= count_) {
    throw RangeError("label index " + std::to_string(index_) + " outside [0, " +
                     std::to_string(count_) + ")");
  }
}

template <typename Tag>
std::vector<double> Label<Tag>::one_hot() const {
  std::vector<double> v(static_cast<std::size_t>(count), 0.0);
  v[static_cast<std::size_t>(index)] = 1.0;
  return v;
}

template struct Label<StyleTag>;
template struct Label<ContentTag>;

void frame_features_into(const MotionFrame& frame, std::span<double> out) {
  const int j = frame.joint_count();
  if (static_cast<int>(out.size()) != 10 * j) {
    throw ShapeError("frame_features: output length " + std::to_string(out.size()) +
                     " for " + std::to_string(j) + " joints");
  }
  for (int i = 0; i < j; ++i) {
    const Quaternion& q = frame.rotations[i];
    out[4 * i + 0] = q.w;
    out[4 * i + 1] = q.x;
    out[4 * i + 2] = q.y;
    out[4 * i + 3] = q.z;
  }
  const std::size_t pos = 4 * static_cast<std::size_t>(j);
  const std::size_t vel = 7 * static_cast<std::size_t>(j);
  for (int i = 0; i < j; ++i) {
    for (int k = 0; k < 3; ++k) {
      out[pos + 3 * i + k] = frame.positions(i, k);
      out[vel + 3 * i + k] = frame.velocities(i, k);
    }
  }
}

std::vector<double> frame_features(const MotionFrame& frame) {
  std::vector<double> out(10 * static_cast<std::size_t>(frame.joint_count()));
  frame_features_into(frame, out);
  return out;
}

MotionFrame frame_from_features(std::span<const double> features, int joint_count) {
  if (static_cast<int>(features.size()) != 10 * joint_count) {
    throw ShapeError("frame_from_features: " + std::to_string(features.size()) +
                     " values for " + std::to_string(joint_count) + " joints");
  }
  MotionFrame f;
  f.rotations.resize(static_cast<std::size_t>(joint_count));
  f.positions.resize(joint_count, 3);
  f.velocities.resize(joint_count, 3);
  for (int i = 0; i < joint_count; ++i) {
    f.rotations[i] = Quaternion{features[4 * i], features[4 * i + 1], features[4 * i + 2],
                                features[4 * i + 3]}
                         .normalized();
  }
  const std::size_t pos = 4 * static_cast<std::size_t>(joint_count);
  const std::size_t vel = 7 * static_cast<std::size_t>(joint_count);
  for (int i = 0; i < joint_count; ++i) {
    for (int k = 0; k < 3; ++k) {
      f.positions(i, k) = features[pos + 3 * i + k];
      f.velocities(i, k) = features[vel + 3 * i + k];
    }
  }
  return f;
}

std::vector<MotionFrame> assemble_frames(const Skeleton& skeleton,
                                         const std::vector<std::vector<Quaternion>>& rotations,
                                         const std::vector<Eigen::Vector3d>& roots, double fps) {
  if (rotations.size() != roots.size()) {
    throw ShapeError("assemble_frames: " + std::to_string(rotations.size()) +
                     " rotation frames vs " + std::to_string(roots.size()) + " root frames");
  }
  std::vector<MotionFrame> frames(rotations.size());
  std::vector<JointMatrix> positions(rotations.size());
  for (std::size_t t = 0; t < rotations.size(); ++t) {
    positions[t] = root_relative(forward_kinematics(skeleton, rotations[t], roots[t]));
    frames[t].rotations = rotations[t];
    frames[t].positions = positions[t];
    frames[t].root_translation = roots[t];
  }
  if (frames.size() >= 2) {
    auto v = finite_difference_velocities(positions, fps);
    for (std::size_t t = 0; t < frames.size(); ++t) frames[t].velocities = std::move(v[t]);
  } else if (frames.size() == 1) {
    frames[0].velocities = JointMatrix::Zero(skeleton.joint_count(), 3);
  }
  return frames;
}

}  // namespace style_erd
