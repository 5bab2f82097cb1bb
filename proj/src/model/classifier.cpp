#include "style_erd/model/classifier.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/layers.hpp"
#include "style_erd/nn/ops.hpp"

#include <random>

namespace style_erd::model {

using nn::Tensor;
using nn::Var;

ContentClassifier::ContentClassifier(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  int in = config_.frame_width();
  for (std::size_t k = 0; k < config_.conv_channels.size(); ++k) {
    const int out = config_.conv_channels[k];
    const std::string p = "conv." + std::to_string(k);
    const int fan_in = in * config_.kernel;
    const Var w = params_.add(p + ".W", nn::fan_in_tensor({out, in, config_.kernel}, fan_in, rng));
    const Var b = params_.add(p + ".b", nn::fan_in_tensor({out}, fan_in, rng));
    conv_.emplace_back(w, b);
    in = out;
  }
  head_w_ = params_.add("head.W", nn::fan_in_tensor({in, config_.contents}, in, rng));
  head_b_ = params_.add("head.b", nn::fan_in_tensor({config_.contents}, in, rng));
}

Var ContentClassifier::pre_features(const Var& x) const {
  if (x.value().rank() != 3 || x.dim(1) != config_.frame_width() || x.dim(2) != config_.window) {
    throw ShapeError("content classifier: input " + nn::shape_string(x.shape()) +
                     ", expected [N, " + std::to_string(config_.frame_width()) + ", " +
                     std::to_string(config_.window) + "]");
  }
  const nn::ConvGeometry geo{config_.stride, config_.padding};
  Var h = x;
  for (std::size_t k = 0; k < conv_.size(); ++k) {
    h = nn::add_channel_bias(nn::conv1d(h, conv_[k].first, geo), conv_[k].second);
    if (k + 1 < conv_.size()) h = nn::leaky_relu(nn::instance_norm(h));
  }
  return h;
}

Var ContentClassifier::content_features(const Var& x) const {
  return nn::instance_norm(pre_features(x));
}

Var ContentClassifier::logits_from_features(const Var& phi) const {
  const Var pooled = nn::scale(nn::sum_last(nn::leaky_relu(phi)), 1.0 / phi.dim(2));
  return nn::dense(pooled, head_w_, head_b_, nn::Activation::none);
}

}  // namespace style_erd::model
