#include "style_erd/io/dataset.hpp"

#include "style_erd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace style_erd::io {

void MotionClip::validate() const {
  skeleton.validate();
  if (!(fps > 0.0)) throw DomainError("clip '" + id + "' has non-positive fps");
  if (frames.empty()) throw ShapeError("clip '" + id + "' has no frames");
  for (const MotionFrame& f : frames) {
    if (f.joint_count() != skeleton.joint_count()) {
      throw ShapeError("clip '" + id + "' frame joint count differs from skeleton");
    }
    f.validate();
  }
}

MotionClip downsample(const MotionClip& clip, double target_fps) {
  if (!(target_fps > 0.0)) throw UnsupportedRateError("target fps must be positive");
  const double ratio = clip.fps / target_fps;
  const double rounded = std::round(ratio);
  // Frame times in files are often written with six digits, so the rate
  // itself is only known to about 1e-5.
  if (rounded < 1.0 || std::fabs(ratio - rounded) > 1e-4 * ratio) {
    throw UnsupportedRateError("cannot downsample " + std::to_string(clip.fps) + " fps to " +
                               std::to_string(target_fps) + " fps: ratio is not an integer");
  }
  const int step = static_cast<int>(rounded);
  if (step == 1) return clip;
  MotionClip out = clip;
  out.fps = clip.fps / step;
  out.frames.clear();
  for (int t = 0; t < clip.length(); t += step) out.frames.push_back(clip.frames[t]);
  if (out.frames.size() >= 2) {
    std::vector<JointMatrix> positions;
    positions.reserve(out.frames.size());
    for (const MotionFrame& f : out.frames) positions.push_back(f.positions);
    auto v = finite_difference_velocities(positions, out.fps);
    for (std::size_t t = 0; t < out.frames.size(); ++t) out.frames[t].velocities = v[t];
  } else {
    out.frames[0].velocities.setZero();
  }
  return out;
}

std::vector<int> window_starts(int length, int window, int overlap) {
  if (window <= 0 || overlap < 0 || overlap >= window) {
    throw RangeError("window geometry requires T > overlap >= 0 (T=" + std::to_string(window) +
                     ", overlap=" + std::to_string(overlap) + ")");
  }
  std::vector<int> starts;
  if (length < window) return starts;
  const int stride = window - overlap;
  int s = 0;
  for (; s + window <= length; s += stride) starts.push_back(s);
  const int tail = length - window;
  if (starts.back() != tail) starts.push_back(tail);
  return starts;
}

std::vector<MotionWindow> window_clip(const MotionClip& clip, int window, int overlap) {
  std::vector<MotionWindow> out;
  for (int s : window_starts(clip.length(), window, overlap)) {
    MotionWindow w;
    w.frames.assign(clip.frames.begin() + s, clip.frames.begin() + s + window);
    w.style = clip.style;
    w.content = clip.content;
    w.source_id = clip.id;
    w.start_index = s;
    out.push_back(std::move(w));
  }
  return out;
}

WindowedDataset window_clips(const std::vector<MotionClip>& clips, int window, int overlap) {
  WindowedDataset data;
  for (const MotionClip& c : clips) {
    if (c.length() < window) {
      ++data.dropped_short_clips;
      continue;
    }
    auto w = window_clip(c, window, overlap);
    data.windows.insert(data.windows.end(), std::make_move_iterator(w.begin()),
                        std::make_move_iterator(w.end()));
  }
  return data;
}

std::pair<std::vector<MotionClip>, std::vector<MotionClip>> split_dataset(
    const std::vector<MotionClip>& clips, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw RangeError("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates so the split does not depend on the library's shuffle.
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  const auto n_test =
      static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(clips.size())));
  std::vector<bool> is_test(clips.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  std::pair<std::vector<MotionClip>, std::vector<MotionClip>> out;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    (is_test[i] ? out.second : out.first).push_back(clips[i]);
  }
  return out;
}

void relabel_counts(MotionClip& clip, int style_count, int content_count) {
  clip.style = StyleLabel(clip.style.index, style_count);
  clip.content = ContentLabel(clip.content.index, content_count);
}

void apply_label_sidecar(std::vector<MotionClip>& clips, const nlohmann::json& sidecar,
                         int style_count, int content_count) {
  if (!sidecar.is_object()) throw ContractError("label sidecar must be a JSON object");
  for (MotionClip& c : clips) {
    relabel_counts(c, style_count, content_count);
    auto it = sidecar.find(c.id);
    if (it == sidecar.end()) continue;
    c.style = StyleLabel(it->value("style", c.style.index), style_count);
    c.content = ContentLabel(it->value("content", c.content.index), content_count);
  }
}

}  // namespace style_erd::io
