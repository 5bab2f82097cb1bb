#pragma once

#include "style_erd/model/config.hpp"
#include "style_erd/nn/params.hpp"

#include <cstdint>
#include <vector>

namespace style_erd::model {

struct Attention {
  nn::Var feature;   // w_f [N, C']
  nn::Var temporal;  // w_t [N, T']
};

// Conv feature stack on positions + velocities with label-conditioned
// rank-1 attention; D = sum(m_s * (w_f outer w_t)).
class Discriminator {
 public:
  Discriminator(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  // x [N, 6J, T] -> m_s [N, C', T'].
  nn::Var style_features(const nn::Var& x) const;
  // Per-row labels -> sigmoid attention vectors. With attention disabled
  // both are constant ones.
  Attention attention(const std::vector<int>& styles, const std::vector<int>& contents) const;
  // [N, 1] critic values.
  nn::Var discriminate(const nn::Var& x, const std::vector<int>& styles,
                       const std::vector<int>& contents) const;

 private:
  ModelConfig config_;
  nn::ParamStore params_;
  std::vector<std::pair<nn::Var, nn::Var>> conv_;
  std::vector<std::pair<nn::Var, nn::Var>> feature_mlp_;
  std::vector<std::pair<nn::Var, nn::Var>> temporal_mlp_;
};

// Outer product per row: [N, C'] x [N, T'] -> [N, C', T'].
nn::Var attention_matrix(const Attention& a);
// sum_ij (m_s * w_s)_ij per row -> [N, 1].
nn::Var weighted_sum(const nn::Var& features, const nn::Var& weights);

// [N, 6J, T] discriminator input from t-major position/velocity rows
// ([T * N, 3J] each).
nn::Var style_input(const nn::Var& positions, const nn::Var& velocities, int sequences);
// [N, 10J, T] classifier input from t-major rotation/position/velocity rows.
nn::Var content_input(const nn::Var& rotations, const nn::Var& positions,
                      const nn::Var& velocities, int sequences);

}  // namespace style_erd::model
