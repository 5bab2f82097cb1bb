#pragma once

#include "style_erd/skeleton.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace style_erd::model {

// Architecture of generator, discriminator and classifier. Style index 0 is
// neutral; the generator has one recurrent branch per style (branch 0 is the
// neutral basis r0, branch s > 0 the residual for style s).
struct ModelConfig {
  Skeleton skeleton;
  int styles = 3;
  int contents = 2;
  int hidden = 32;  // LSTM width; equals the latent width
  std::vector<int> encoder_layers = {64, 32};
  std::vector<int> decoder_layers = {58, 86, 128, 184};
  int neutral_layers = 6;
  int style_layers = 4;
  int window = 24;
  double fps = 60.0;
  std::vector<int> conv_channels = {96, 128, 160};
  int kernel = 4;
  int stride = 2;
  int padding = 1;
  int feature_attention_hidden = 64;
  int temporal_attention_hidden = 16;
  // Ablations.
  bool zero_init_states = false;
  bool attention = true;

  int joints() const { return skeleton.joint_count(); }
  int latent() const { return encoder_layers.back(); }
  int frame_width() const { return 10 * joints(); }
  int decoder_output() const { return 7 * joints(); }
  // Temporal length after the conv stack.
  int temporal_features() const;
  int feature_channels() const { return conv_channels.back(); }
  int branch_layers(int branch) const { return branch == 0 ? neutral_layers : style_layers; }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

nlohmann::json skeleton_to_json(const Skeleton& s);
Skeleton skeleton_from_json(const nlohmann::json& j);

}  // namespace style_erd::model
