#include "style_erd/model/discriminator.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/model/generator.hpp"
#include "style_erd/nn/layers.hpp"
#include "style_erd/nn/ops.hpp"

#include <random>

namespace style_erd::model {

using nn::Tensor;
using nn::Var;

namespace {

std::vector<std::pair<Var, Var>> make_mlp(nn::ParamStore& store, const std::string& prefix,
                                          std::vector<int> widths, std::mt19937_64& rng) {
  std::vector<std::pair<Var, Var>> layers;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::string p = prefix + "." + std::to_string(k);
    const Var w = store.add(p + ".W", nn::fan_in_tensor({widths[k], widths[k + 1]}, widths[k], rng));
    const Var b = store.add(p + ".b", nn::fan_in_tensor({widths[k + 1]}, widths[k], rng));
    layers.emplace_back(w, b);
  }
  return layers;
}

Var run_mlp(const std::vector<std::pair<Var, Var>>& layers, Var x) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const bool last = k + 1 == layers.size();
    x = nn::dense(x, layers[k].first, layers[k].second,
                  last ? nn::Activation::sigmoid : nn::Activation::leaky_relu);
  }
  return x;
}

// [T * N, C] t-major rows -> [N, C, T].
Var to_channels_first(const Var& rows, int sequences) {
  const int total = rows.dim(0);
  if (sequences < 1 || total % sequences != 0) {
    throw ShapeError("to_channels_first: " + std::to_string(total) + " rows for " +
                     std::to_string(sequences) + " sequences");
  }
  const int steps = total / sequences;
  return nn::permute3(nn::reshape(rows, {steps, sequences, rows.dim(1)}), {1, 2, 0});
}

}  // namespace

Discriminator::Discriminator(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  int in = 6 * config_.joints();
  for (std::size_t k = 0; k < config_.conv_channels.size(); ++k) {
    const int out = config_.conv_channels[k];
    const std::string p = "conv." + std::to_string(k);
    const int fan_in = in * config_.kernel;
    const Var w = params_.add(p + ".W", nn::fan_in_tensor({out, in, config_.kernel}, fan_in, rng));
    const Var b = params_.add(p + ".b", nn::fan_in_tensor({out}, fan_in, rng));
    conv_.emplace_back(w, b);
    in = out;
  }
  if (config_.attention) {
    const int labels = config_.styles + config_.contents;
    feature_mlp_ = make_mlp(params_, "att.feature",
                            {labels, config_.feature_attention_hidden, config_.feature_channels()}, rng);
    temporal_mlp_ = make_mlp(params_, "att.temporal",
                             {labels, config_.temporal_attention_hidden, config_.temporal_features()}, rng);
  }
}

Var Discriminator::style_features(const Var& x) const {
  const int t = config_.window;
  if (x.value().rank() != 3 || x.dim(1) != 6 * config_.joints() || x.dim(2) != t) {
    throw ShapeError("style_features: input " + nn::shape_string(x.shape()) + ", expected [N, " +
                     std::to_string(6 * config_.joints()) + ", " + std::to_string(t) + "]");
  }
  Var h = x;
  const nn::ConvGeometry geo{config_.stride, config_.padding};
  for (const auto& [w, b] : conv_) {
    h = nn::leaky_relu(nn::add_channel_bias(nn::conv1d(h, w, geo), b));
  }
  return h;
}

Attention Discriminator::attention(const std::vector<int>& styles,
                                   const std::vector<int>& contents) const {
  const int n = static_cast<int>(styles.size());
  if (static_cast<int>(contents.size()) != n) throw ShapeError("attention: label count mismatch");
  if (!config_.attention) {
    return {nn::constant(Tensor({n, config_.feature_channels()}, 1.0)),
            nn::constant(Tensor({n, config_.temporal_features()}, 1.0))};
  }
  const Var labels = nn::constant(nn::concat_cols({nn::constant(one_hot_rows(styles, config_.styles)),
                                                   nn::constant(one_hot_rows(contents, config_.contents))})
                                      .value());
  return {run_mlp(feature_mlp_, labels), run_mlp(temporal_mlp_, labels)};
}

Var Discriminator::discriminate(const Var& x, const std::vector<int>& styles,
                                const std::vector<int>& contents) const {
  if (static_cast<int>(styles.size()) != x.dim(0)) {
    throw ShapeError("discriminate: " + std::to_string(styles.size()) + " labels for batch of " +
                     std::to_string(x.dim(0)));
  }
  return weighted_sum(style_features(x), attention_matrix(attention(styles, contents)));
}

Var attention_matrix(const Attention& a) {
  const int c = a.feature.dim(1);
  const int t = a.temporal.dim(1);
  return nn::mul(nn::expand_last(a.feature, t), nn::expand_mid(a.temporal, c));
}

Var weighted_sum(const Var& features, const Var& weights) {
  const Var per_channel = nn::sum_last(nn::mul(features, weights));  // [N, C']
  return nn::group_sum(per_channel, per_channel.dim(1));
}

Var style_input(const Var& positions, const Var& velocities, int sequences) {
  return to_channels_first(nn::concat_cols({positions, velocities}), sequences);
}

Var content_input(const Var& rotations, const Var& positions, const Var& velocities,
                  int sequences) {
  return to_channels_first(nn::concat_cols({rotations, positions, velocities}), sequences);
}

}  // namespace style_erd::model
