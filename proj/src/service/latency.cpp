#include "style_erd/service/latency.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/service/online.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace style_erd::service {

nlohmann::json LatencyReport::to_json(bool with_series) const {
  nlohmann::json j = {{"frames", series_us.size()}, {"p50_us", p50},  {"p95_us", p95},
                      {"max_us", max},              {"mean_us", mean}, {"fps_sustained", fps_sustained}};
  if (with_series) j["series_us"] = series_us;
  return j;
}

LatencyReport summarize_latency(std::vector<double> series_us) {
  if (series_us.empty()) throw ContractError("latency summary of an empty series");
  LatencyReport r;
  std::vector<double> sorted = series_us;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
    return sorted[std::max<std::size_t>(k, 1) - 1];
  };
  r.p50 = rank(0.50);
  r.p95 = rank(0.95);
  r.max = sorted.back();
  r.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  r.fps_sustained = r.mean > 0.0 ? 1e6 / r.mean : 0.0;
  r.series_us = std::move(series_us);
  return r;
}

LatencyReport bench_latency(const model::Generator& gen, int n_frames, const BenchOptions& options) {
  if (n_frames < 1) throw RangeError("bench needs at least one frame");
  if (options.warmup < 0) throw RangeError("warmup must be non-negative");
  const model::ModelConfig& cfg = gen.config();
  const int total = n_frames + options.warmup;
  const int joints = cfg.joints();

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::Vector3d> axes;
  std::vector<double> phase;
  for (int j = 0; j < joints; ++j) {
    axes.push_back(Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized());
    phase.push_back(n(rng));
  }
  OnlineKinematics kin(cfg.skeleton, cfg.fps);
  std::vector<MotionFrame> frames;
  frames.reserve(static_cast<std::size_t>(total));
  for (int f = 0; f < total; ++f) {
    std::vector<Quaternion> rot;
    for (int j = 0; j < joints; ++j) {
      rot.push_back(Quaternion::from_axis_angle(axes[j], 0.4 * std::sin(0.05 * f + phase[j])));
    }
    frames.push_back(kin.next(std::move(rot), Eigen::Vector3d(0.0, 1.0, f / cfg.fps)));
  }

  model::TargetSpec target;
  target.style = cfg.styles > 1 ? 1 : kNeutralStyle;
  if (options.target) target = *options.target;
  model::StreamSession session(gen, StyleLabel(kNeutralStyle, cfg.styles), ContentLabel(0, cfg.contents),
                               target);
  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < total; ++f) {
    const auto t0 = std::chrono::steady_clock::now();
    const MotionFrame out = session.transfer_frame(frames[f]);
    const auto t1 = std::chrono::steady_clock::now();
    if (f >= options.warmup) series.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  return summarize_latency(std::move(series));
}

}  // namespace style_erd::service
