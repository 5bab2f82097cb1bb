#pragma once

#include "style_erd/model/generator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();
};

// Generators saved along the training run, shared with later criteria.
struct Checkpoints {
  std::optional<std::filesystem::path> mid;
  std::optional<std::filesystem::path> trained;
};

struct Context {
  std::filesystem::path work_dir;
  std::filesystem::path data_dir;
  int epochs = 150;
  int clips_per_pair = 22;
  std::uint64_t seed = 1;
  Checkpoints checkpoints;
  // Worst-case criterion (b) ratio of the full model, for the ablation.
  std::optional<double> full_model_ratio;
};

Outcome gradient_integrity(Context&);
Outcome loss_oracles(Context&);
Outcome frechet_oracle(Context&);
Outcome training_efficacy(Context&);
Outcome ablation_direction(Context&);
Outcome online_offline(Context&);
Outcome latency_budget(Context&);
Outcome protocol_conformance(Context&);
Outcome parser_round_trip(Context&);

// Held-out figures of one training run.
struct EfficacyRun {
  double angle_error = 0.0;            // mean full rotation angle, radians
  std::vector<double> ratios;          // per non-neutral style
  std::vector<double> fmd_transferred;
  std::vector<double> fmd_baseline;
  double train_seconds = 0.0;
  int windows = 0;
  int epochs = 0;
};

EfficacyRun run_efficacy(Context& ctx, bool no_adv, bool keep_checkpoints);

}  // namespace acceptance
