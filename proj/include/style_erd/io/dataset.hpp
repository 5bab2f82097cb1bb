#pragma once

#include "style_erd/motion.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace style_erd::io {

struct MotionClip {
  Skeleton skeleton;
  std::vector<MotionFrame> frames;
  double fps = 60.0;
  StyleLabel style;
  ContentLabel content;
  std::string id;

  int length() const noexcept { return static_cast<int>(frames.size()); }
  void validate() const;
};

inline constexpr int kDefaultWindow = 24;
inline constexpr int kDefaultOverlap = 4;

struct MotionWindow {
  std::vector<MotionFrame> frames;
  StyleLabel style;
  ContentLabel content;
  std::string source_id;
  int start_index = 0;

  int length() const noexcept { return static_cast<int>(frames.size()); }
};

// Keeps every (fps / target_fps)-th frame from index 0 and recomputes
// velocities at the new rate. Throws UnsupportedRateError unless the ratio is
// an integer.
MotionClip downsample(const MotionClip& clip, double target_fps);

// Window start offsets for a clip of `length` frames: stride T - overlap from
// 0, plus one end-aligned window when the stride leaves a remainder. Empty
// when length < T.
std::vector<int> window_starts(int length, int window, int overlap);

std::vector<MotionWindow> window_clip(const MotionClip& clip, int window = kDefaultWindow,
                                      int overlap = kDefaultOverlap);

struct WindowedDataset {
  std::vector<MotionWindow> windows;
  int dropped_short_clips = 0;  // clips shorter than the window length
};

WindowedDataset window_clips(const std::vector<MotionClip>& clips, int window = kDefaultWindow,
                             int overlap = kDefaultOverlap);

// Clip-granular random partition, deterministic in seed. Both sides keep the
// input order.
std::pair<std::vector<MotionClip>, std::vector<MotionClip>> split_dataset(
    const std::vector<MotionClip>& clips, double test_fraction, std::uint64_t seed);

// Applies a sidecar {clip_id: {"style": int, "content": int}} to matching
// clips, setting label counts to (style_count, content_count). Clips absent
// from the sidecar keep their indices.
void apply_label_sidecar(std::vector<MotionClip>& clips, const nlohmann::json& sidecar,
                         int style_count, int content_count);

// Re-bases labels onto a model's label counts (indices unchanged).
void relabel_counts(MotionClip& clip, int style_count, int content_count);

}  // namespace style_erd::io
