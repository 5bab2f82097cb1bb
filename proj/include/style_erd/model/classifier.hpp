#pragma once

#include "style_erd/model/config.hpp"
#include "style_erd/nn/params.hpp"

#include <cstdint>
#include <vector>

namespace style_erd::model {

// Content classifier: conv stack of the discriminator's geometry on all 10J
// channels, each conv followed by instance norm. Features phi are the last
// normalized conv output; the head averages leaky(phi) over time and maps
// it to content logits.
class ContentClassifier {
 public:
  ContentClassifier(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  // x [N, 10J, T] -> input of the final instance norm [N, C', T'].
  nn::Var pre_features(const nn::Var& x) const;
  // phi [N, C', T'].
  nn::Var content_features(const nn::Var& x) const;
  nn::Var logits_from_features(const nn::Var& phi) const;  // [N, n_C]
  nn::Var logits(const nn::Var& x) const { return logits_from_features(content_features(x)); }

 private:
  ModelConfig config_;
  nn::ParamStore params_;
  std::vector<std::pair<nn::Var, nn::Var>> conv_;
  nn::Var head_w_;
  nn::Var head_b_;
};

}  // namespace style_erd::model
