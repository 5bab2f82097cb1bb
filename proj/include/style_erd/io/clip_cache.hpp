#pragma once

#include "style_erd/io/dataset.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace style_erd::io {

inline constexpr std::uint32_t kClipCacheVersion = 1;

// Binary container: magic "SERDCLIP", u32 version, u32 clip count, then per
// clip the id, fps, labels, skeleton and per-frame root translation plus
// rotations. Positions and velocities are re-derived on load.
void write_clip_cache(std::ostream& out, const std::vector<MotionClip>& clips);
std::vector<MotionClip> read_clip_cache(std::istream& in);
void save_clip_cache(const std::filesystem::path& path, const std::vector<MotionClip>& clips);
std::vector<MotionClip> load_clip_cache(const std::filesystem::path& path);

// Loads a .bvh file, a clip cache, or a directory of .bvh files (sorted by
// name, ids = file stems). A directory may hold labels.json:
// {"styles": S, "contents": C, "clips": {id: {"style": s, "content": c}}}.
std::vector<MotionClip> load_clips(const std::filesystem::path& path);

}  // namespace style_erd::io
