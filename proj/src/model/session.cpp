#include "style_erd/model/session.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"

namespace style_erd::model {

using nn::Tensor;
using nn::Var;

void TargetSpec::validate(int styles) const {
  if (style < 0 || style >= styles) {
    throw RangeError("target style " + std::to_string(style) + " outside [0, " +
                     std::to_string(styles) + ")");
  }
  if (second_style && (*second_style < 0 || *second_style >= styles)) {
    throw RangeError("second style " + std::to_string(*second_style) + " outside [0, " +
                     std::to_string(styles) + ")");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw RangeError("alpha " + std::to_string(alpha) + " outside [0, 1]");
  }
}

std::vector<std::pair<int, double>> residual_weights(const TargetSpec& spec) {
  std::vector<std::pair<int, double>> out;
  auto add = [&](int style, double w) {
    if (style == kNeutralStyle) return;
    for (auto& [s, v] : out) {
      if (s == style) {
        v += w;
        return;
      }
    }
    out.emplace_back(style, w);
  };
  add(spec.style, spec.alpha);
  if (spec.second_style) add(*spec.second_style, 1.0 - spec.alpha);
  return out;
}

Tensor target_label_row(const TargetSpec& spec, int styles) {
  Tensor row({1, styles});
  row.at(0, spec.style) += spec.alpha;
  row.at(0, spec.second_style.value_or(kNeutralStyle)) += 1.0 - spec.alpha;
  return row;
}

namespace {

Tensor label_row(int index, int count) {
  Tensor row({1, count});
  row.at(0, index) = 1.0;
  return row;
}

// z' for one step given the r0 output and each engaged branch's output.
Var combine(const Var& neutral, const std::vector<std::pair<Var, double>>& residuals) {
  Var out = neutral;
  for (const auto& [r, w] : residuals) out = nn::add(out, w == 1.0 ? r : nn::scale(r, w));
  return out;
}

}  // namespace

StreamSession::StreamSession(const Generator& gen, StyleLabel source, ContentLabel content,
                             TargetSpec target)
    : gen_(&gen), source_(source), content_(content) {
  const ModelConfig& cfg = gen.config();
  source_ = StyleLabel(source.index, cfg.styles);
  content_ = ContentLabel(content.index, cfg.contents);
  target.validate(cfg.styles);
  source_row_ = label_row(source_.index, cfg.styles);
  content_row_ = label_row(content_.index, cfg.contents);
  nn::NoGradGuard no_grad;
  neutral_ = gen.initial_state(0, {content_.index});
  set_target(target);
}

void StreamSession::require_open() const {
  if (!gen_) throw LifecycleError("stream session is not initialized");
}

void StreamSession::set_target(const TargetSpec& spec) {
  require_open();
  const ModelConfig& cfg = gen_->config();
  spec.validate(cfg.styles);
  nn::NoGradGuard no_grad;
  std::map<int, BranchState> next;
  for (const auto& [style, weight] : residual_weights(spec)) {
    (void)weight;
    auto found = engaged_.find(style);
    next[style] = found != engaged_.end() ? std::move(found->second)
                                          : gen_->initial_state(style, {content_.index});
  }
  engaged_ = std::move(next);
  target_ = spec;
  target_row_ = target_label_row(spec, cfg.styles);
}

Var StreamSession::recurrent_step(const Var& z) {
  require_open();
  nn::NoGradGuard no_grad;
  last_neutral_ = gen_->step(0, z, neutral_);
  std::vector<std::pair<Var, double>> residuals;
  for (const auto& [style, weight] : residual_weights(target_)) {
    residuals.emplace_back(gen_->step(style, z, engaged_.at(style)), weight);
  }
  return combine(last_neutral_, residuals);
}

MotionFrame StreamSession::transfer_frame(const MotionFrame& frame) {
  require_open();
  const ModelConfig& cfg = gen_->config();
  if (frame.joint_count() != cfg.joints()) {
    throw ShapeError("frame has " + std::to_string(frame.joint_count()) +
                     " joints; model expects " + std::to_string(cfg.joints()));
  }
  nn::NoGradGuard no_grad;
  Tensor features({1, cfg.frame_width()});
  frame_features_into(frame, features.data());
  const Var z = gen_->encode(nn::constant(std::move(features)), source_row_, content_row_);
  const Var zp = recurrent_step(z);
  const DecodedMotion out = gen_->decode(zp, target_row_);
  ++frame_index_;
  return frames_from_decoded(out, {frame.root_translation}).front();
}

const BranchState& StreamSession::neutral_state() const {
  require_open();
  return neutral_;
}

const BranchState* StreamSession::style_state(int style) const {
  require_open();
  auto found = engaged_.find(style);
  return found == engaged_.end() ? nullptr : &found->second;
}

std::vector<MotionFrame> frames_from_decoded(const DecodedMotion& motion,
                                             const std::vector<Eigen::Vector3d>& roots) {
  const Tensor& rot = motion.rotations.value();
  const Tensor& pos = motion.positions.value();
  const Tensor& vel = motion.velocities.value();
  const int rows = rot.dim(0);
  const int joints = rot.dim(1) / 4;
  if (static_cast<int>(roots.size()) != rows) {
    throw ShapeError("frames_from_decoded: " + std::to_string(roots.size()) + " roots for " +
                     std::to_string(rows) + " rows");
  }
  std::vector<MotionFrame> frames(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    MotionFrame& f = frames[r];
    f.rotations.resize(static_cast<std::size_t>(joints));
    f.positions.resize(joints, 3);
    f.velocities.resize(joints, 3);
    for (int j = 0; j < joints; ++j) {
      f.rotations[j] = {rot.at(r, 4 * j), rot.at(r, 4 * j + 1), rot.at(r, 4 * j + 2),
                        rot.at(r, 4 * j + 3)};
      for (int k = 0; k < 3; ++k) {
        f.positions(j, k) = pos.at(r, 3 * j + k);
        f.velocities(j, k) = vel.at(r, 3 * j + k);
      }
    }
    f.root_translation = roots[r];
  }
  return frames;
}

std::vector<MotionFrame> transfer_offline(const Generator& gen,
                                          const std::vector<MotionFrame>& frames,
                                          StyleLabel source, ContentLabel content,
                                          const TargetSpec& target) {
  const ModelConfig& cfg = gen.config();
  target.validate(cfg.styles);
  source = StyleLabel(source.index, cfg.styles);
  content = ContentLabel(content.index, cfg.contents);
  if (frames.empty()) return {};
  nn::NoGradGuard no_grad;
  const int steps = static_cast<int>(frames.size());
  for (const MotionFrame& f : frames) {
    if (f.joint_count() != cfg.joints()) throw ShapeError("frame joint count differs from model");
  }
  const Tensor features = pack_features({&frames});
  const std::vector<int> source_rows(static_cast<std::size_t>(steps), source.index);
  const std::vector<int> content_rows(static_cast<std::size_t>(steps), content.index);
  const Var z = gen.encode(nn::constant(features), one_hot_rows(source_rows, cfg.styles),
                           one_hot_rows(content_rows, cfg.contents));
  BranchState neutral = gen.initial_state(0, {content.index});
  const auto weights = residual_weights(target);
  std::vector<BranchState> states;
  for (const auto& [style, w] : weights) states.push_back(gen.initial_state(style, {content.index}));
  std::vector<Var> latents;
  for (int t = 0; t < steps; ++t) {
    const Var zt = nn::slice_rows(z, t, 1);
    const Var base = gen.step(0, zt, neutral);
    std::vector<std::pair<Var, double>> residuals;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      residuals.emplace_back(gen.step(weights[k].first, zt, states[k]), weights[k].second);
    }
    latents.push_back(combine(base, residuals));
  }
  const Tensor label = target_label_row(target, cfg.styles);
  Tensor labels({steps, cfg.styles});
  for (int t = 0; t < steps; ++t) {
    for (int s = 0; s < cfg.styles; ++s) labels.at(t, s) = label.at(0, s);
  }
  const DecodedMotion out = gen.decode(nn::concat_rows(latents), labels);
  std::vector<Eigen::Vector3d> roots;
  for (const MotionFrame& f : frames) roots.push_back(f.root_translation);
  return frames_from_decoded(out, roots);
}

}  // namespace style_erd::model
