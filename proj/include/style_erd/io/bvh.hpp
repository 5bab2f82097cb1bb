#pragma once

#include "style_erd/io/dataset.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace style_erd::io {

// Axis indices (0 = X, 1 = Y, 2 = Z) in channel order; the rotation is the
// intrinsic product R_a0 * R_a1 * R_a2.
using EulerOrder = std::array<int, 3>;
inline constexpr EulerOrder kOrderZXY = {2, 0, 1};

Quaternion euler_to_quaternion(const std::array<double, 3>& degrees, EulerOrder order);
std::array<double, 3> quaternion_to_euler(const Quaternion& q, EulerOrder order);

// Parses the HIERARCHY/MOTION subset: one root with 6 channels, 3 rotation
// channels on every other joint, End Site blocks ignored. Rotations are
// canonicalized to w >= 0. Labels default to (neutral, content 0).
MotionClip parse_bvh(std::string_view text, const std::string& id = "clip");
MotionClip load_bvh(const std::filesystem::path& path);

// Writes root channels as X/Y/Z position then `order` rotation, every joint
// with `order`; values use 9 significant digits.
std::string serialize_bvh(const MotionClip& clip, EulerOrder order = kOrderZXY);
void save_bvh(const std::filesystem::path& path, const MotionClip& clip,
              EulerOrder order = kOrderZXY);

}  // namespace style_erd::io
