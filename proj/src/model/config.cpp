#include "style_erd/model/config.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"

namespace style_erd::model {

int ModelConfig::temporal_features() const {
  int t = window;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    t = nn::conv_output_length(t, kernel, {stride, padding});
  }
  return t;
}

void ModelConfig::validate() const {
  skeleton.validate();
  if (styles < 1 || contents < 1) throw DomainError("model needs at least one style and content");
  if (encoder_layers.empty() || conv_channels.empty()) {
    throw DomainError("model needs encoder layers and conv channels");
  }
  if (latent() != hidden) {
    throw DomainError("latent width " + std::to_string(latent()) + " must equal LSTM width " +
                      std::to_string(hidden) + " for the residual sum");
  }
  if (neutral_layers < 1 || style_layers < 1) throw DomainError("branches need at least one layer");
  if (window < 2 || !(fps > 0.0)) throw DomainError("invalid window or fps");
  for (int w : encoder_layers) if (w < 1) throw DomainError("non-positive layer width");
  for (int w : decoder_layers) if (w < 1) throw DomainError("non-positive layer width");
  for (int w : conv_channels) if (w < 1) throw DomainError("non-positive channel count");
  if (temporal_features() < 2) {
    throw DomainError("conv stack leaves fewer than 2 time steps for window " +
                      std::to_string(window));
  }
}

nlohmann::json skeleton_to_json(const Skeleton& s) {
  nlohmann::json offsets = nlohmann::json::array();
  for (const auto& o : s.offsets) offsets.push_back({o.x(), o.y(), o.z()});
  return {{"parents", s.parents}, {"offsets", offsets}, {"names", s.names}};
}

Skeleton skeleton_from_json(const nlohmann::json& j) {
  Skeleton s;
  s.parents = j.at("parents").get<std::vector<int>>();
  for (const auto& o : j.at("offsets")) {
    s.offsets.emplace_back(o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>());
  }
  if (j.contains("names")) s.names = j.at("names").get<std::vector<std::string>>();
  return s;
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"joints", joints()},
      {"skeleton", skeleton_to_json(skeleton)},
      {"styles", styles},
      {"contents", contents},
      {"hidden", hidden},
      {"encoder_layers", encoder_layers},
      {"decoder_layers", decoder_layers},
      {"neutral_layers", neutral_layers},
      {"style_layers", style_layers},
      {"window", window},
      {"fps", fps},
      {"conv_channels", conv_channels},
      {"kernel", kernel},
      {"stride", stride},
      {"padding", padding},
      {"feature_attention_hidden", feature_attention_hidden},
      {"temporal_attention_hidden", temporal_attention_hidden},
      {"zero_init_states", zero_init_states},
      {"attention", attention},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.skeleton = skeleton_from_json(j.at("skeleton"));
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("styles", c.styles);
  get("contents", c.contents);
  get("hidden", c.hidden);
  get("encoder_layers", c.encoder_layers);
  get("decoder_layers", c.decoder_layers);
  get("neutral_layers", c.neutral_layers);
  get("style_layers", c.style_layers);
  get("window", c.window);
  get("fps", c.fps);
  get("conv_channels", c.conv_channels);
  get("kernel", c.kernel);
  get("stride", c.stride);
  get("padding", c.padding);
  get("feature_attention_hidden", c.feature_attention_hidden);
  get("temporal_attention_hidden", c.temporal_attention_hidden);
  get("zero_init_states", c.zero_init_states);
  get("attention", c.attention);
  c.validate();
  return c;
}

}  // namespace style_erd::model
