#pragma once

#include "style_erd/io/dataset.hpp"

#include <cstdint>
#include <vector>

namespace style_erd::io {

// Procedural gait modifiers. Scales multiply the neutral motion; lean is a
// constant forward (positive) or backward spine pitch in radians.
struct SynthStyleParams {
  double amplitude_scale = 1.0;
  double frequency_scale = 1.0;
  double lean_angle = 0.0;
  double arm_swing_scale = 1.0;
  double bounce_scale = 1.0;

  void validate() const;
};

inline constexpr int kSynthJointCount = 13;
inline constexpr int kSynthStylePresets = 7;
inline constexpr int kSynthContents = 2;  // 0 = walk, 1 = jump

// root, spine, head, left hip/knee/ankle, right hip/knee/ankle,
// left shoulder/elbow, right shoulder/elbow.
Skeleton synth_skeleton();

// Preset 0 is neutral; 1..6 are proud, depressed, old, angry, childlike,
// strutting.
SynthStyleParams synth_style_preset(int index);
const char* synth_style_name(int index);

// Deterministic in seed. The seed also jitters phase, amplitude and cadence
// slightly so clips of one style are not identical.
MotionClip synth_gait(ContentLabel content, const SynthStyleParams& style, int length, double fps,
                      std::uint64_t seed);

struct SynthDatasetConfig {
  int styles = 3;
  int contents = 2;
  int clips_per_pair = 8;
  int length = 120;
  double fps = 60.0;
  std::uint64_t seed = 1;
};

// clips_per_pair clips for every (preset style, content) pair, labelled with
// counts (styles, contents). Clip ids are "s<style>_c<content>_<k>".
std::vector<MotionClip> make_synthetic_dataset(const SynthDatasetConfig& config);

}  // namespace style_erd::io
