#pragma once

#include "style_erd/io/dataset.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/model/config.hpp"
#include "style_erd/train/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace style_erd::train {

// Where training clips come from and how they are split and windowed.
struct DataSpec {
  std::optional<io::SynthDatasetConfig> synthetic;  // used when no clip path is given
  std::filesystem::path clips;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 3;
  int window = io::kDefaultWindow;
  int overlap = io::kDefaultOverlap;
};

// A complete training run description, as read from a --config file:
// {"data": {...}, "model": {...}, "train": {...}, "classifier": {...}}.
// "model" may omit the skeleton and label counts; they come from the data.
struct ExperimentConfig {
  DataSpec data;
  nlohmann::json model = nlohmann::json::object();
  TrainConfig train;
  ClassifierTraining classifier;
  std::filesystem::path classifier_checkpoint;  // reuse instead of pretraining

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct PreparedData {
  model::ModelConfig model;
  std::vector<io::MotionClip> train_clips;
  std::vector<io::MotionClip> test_clips;
  std::vector<io::MotionWindow> train;
  std::vector<io::MotionWindow> test;
  nlohmann::json label_names = nlohmann::json::object();  // {"style": [...], "content": [...]}
};

// Loads or synthesizes clips, splits by clip, windows both sides at the
// model rate and completes the model configuration.
PreparedData prepare_data(const ExperimentConfig& config);

}  // namespace style_erd::train
