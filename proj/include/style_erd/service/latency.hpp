#pragma once

#include "style_erd/model/generator.hpp"
#include "style_erd/model/session.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace style_erd::service {

struct LatencyReport {
  std::vector<double> series_us;  // per measured frame
  double p50 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double fps_sustained = 0.0;  // 1 / mean frame time

  nlohmann::json to_json(bool with_series = false) const;
};

// Nearest-rank percentiles of a non-empty series.
LatencyReport summarize_latency(std::vector<double> series_us);

struct BenchOptions {
  int warmup = 10;  // leading frames excluded from the statistics
  std::uint64_t seed = 1;
  // Defaults to the first non-neutral style, so a residual branch runs.
  std::optional<model::TargetSpec> target;
};

// Times StreamSession::transfer_frame alone over a smooth synthetic stream of
// n_frames measured frames. Input preparation is done up front.
LatencyReport bench_latency(const model::Generator& gen, int n_frames, const BenchOptions& options = {});

}  // namespace style_erd::service
