#pragma once

#include "style_erd/model/generator.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace style_erd::model {

// Target of a stream. Without a second style, alpha scales the single
// residual (z' = r0 + alpha r_target); with one, z' = r0 + alpha r_target +
// (1 - alpha) r_second. The decoder label is blended with the same weights
// (the neutral label stands in for the missing second style), so alpha = 0
// reproduces the neutral path and alpha = 1 the plain target.
struct TargetSpec {
  int style = kNeutralStyle;
  std::optional<int> second_style;
  double alpha = 1.0;

  // Throws RangeError for labels outside [0, styles) or alpha outside [0, 1].
  void validate(int styles) const;
  bool operator==(const TargetSpec&) const = default;
};

// Non-neutral styles whose branches are engaged, with their residual weights.
std::vector<std::pair<int, double>> residual_weights(const TargetSpec& spec);
// [1, styles] decoder conditioning row.
nn::Tensor target_label_row(const TargetSpec& spec, int styles);

// Live per-stream generator state. Holds a pointer to the generator, which
// must outlive the session. Not thread-safe; one owner at a time.
class StreamSession {
 public:
  StreamSession() = default;
  StreamSession(const Generator& gen, StyleLabel source, ContentLabel content, TargetSpec target);

  bool is_open() const noexcept { return gen_ != nullptr; }
  // Encodes, advances every engaged branch one step and decodes one frame.
  // Output root translation is copied from the input.
  MotionFrame transfer_frame(const MotionFrame& frame);
  // The latent combination step alone: z [1, latent] -> z'.
  nn::Var recurrent_step(const nn::Var& z);
  // Newly engaged branches start from their learned initial states; kept
  // branches and r0 retain their state.
  void set_target(const TargetSpec& spec);

  const TargetSpec& target() const noexcept { return target_; }
  int frame_index() const noexcept { return frame_index_; }
  StyleLabel source() const noexcept { return source_; }
  ContentLabel content() const noexcept { return content_; }
  const BranchState& neutral_state() const;
  // Null when the style's branch is not engaged.
  const BranchState* style_state(int style) const;
  // Output of r0 at the last recurrent step.
  const nn::Var& last_neutral_output() const noexcept { return last_neutral_; }

 private:
  void require_open() const;

  const Generator* gen_ = nullptr;
  StyleLabel source_;
  ContentLabel content_;
  TargetSpec target_;
  nn::Tensor source_row_;
  nn::Tensor content_row_;
  nn::Tensor target_row_;
  BranchState neutral_;
  std::map<int, BranchState> engaged_;
  nn::Var last_neutral_;
  int frame_index_ = 0;
};

// One-pass transfer of a whole sequence: all frames encoded and decoded in
// single batched calls, recurrence stepped over time. Equivalent to feeding
// the frames through a fresh StreamSession.
std::vector<MotionFrame> transfer_offline(const Generator& gen,
                                          const std::vector<MotionFrame>& frames,
                                          StyleLabel source, ContentLabel content,
                                          const TargetSpec& target);

// Builds output frames from decoded rows; roots are copied per row.
std::vector<MotionFrame> frames_from_decoded(const DecodedMotion& motion,
                                             const std::vector<Eigen::Vector3d>& roots);

}  // namespace style_erd::model
