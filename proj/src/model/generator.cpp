#include "style_erd/model/generator.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/model/kinematics.hpp"
#include "style_erd/nn/ops.hpp"

#include <random>

namespace style_erd::model {

using nn::Tensor;
using nn::Var;

Tensor one_hot_rows(const std::vector<int>& indices, int count) {
  Tensor t({static_cast<int>(indices.size()), count});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= count) {
      throw RangeError("label index " + std::to_string(indices[r]) + " outside [0, " +
                       std::to_string(count) + ")");
    }
    t.at(static_cast<int>(r), indices[r]) = 1.0;
  }
  return t;
}

Generator::Generator(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const int h = config_.hidden;

  int width = config_.frame_width() + config_.styles + config_.contents;
  for (std::size_t k = 0; k < config_.encoder_layers.size(); ++k) {
    const int out = config_.encoder_layers[k];
    const std::string p = "enc." + std::to_string(k);
    const Var w = params_.add(p + ".W", nn::fan_in_tensor({width, out}, width, rng));
    const Var b = params_.add(p + ".b", nn::fan_in_tensor({out}, width, rng));
    encoder_.emplace_back(w, b);
    width = out;
  }

  for (int b = 0; b < config_.styles; ++b) {
    BranchWeights bw;
    for (int l = 0; l < config_.branch_layers(b); ++l) {
      const std::string p = "branch." + std::to_string(b) + ".layer." + std::to_string(l);
      const Var w = params_.add(p + ".W", nn::fan_in_tensor({2 * h, 4 * h}, h, rng));
      const Var bias = params_.add(p + ".b", nn::fan_in_tensor({4 * h}, h, rng));
      bw.layers.push_back({w, bias});
    }
    branches_.push_back(std::move(bw));
  }

  for (int b = 0; b < config_.styles; ++b) {
    if (config_.zero_init_states) {
      initial_.emplace_back();
      continue;
    }
    const int rows = b == 0 ? config_.contents : 1;
    const int cols = config_.branch_layers(b) * h;
    const std::string p = "h0." + std::to_string(b);
    const Var hv = params_.add(p + ".h", nn::fan_in_tensor({rows, cols}, h, rng));
    const Var cv = params_.add(p + ".c", nn::fan_in_tensor({rows, cols}, h, rng));
    initial_.emplace_back(hv, cv);
  }

  width = config_.latent() + config_.styles;
  for (std::size_t k = 0; k < config_.decoder_layers.size(); ++k) {
    const int out = config_.decoder_layers[k];
    const std::string p = "dec." + std::to_string(k);
    const Var w = params_.add(p + ".W", nn::fan_in_tensor({width, out}, width, rng));
    const Var b = params_.add(p + ".b", nn::fan_in_tensor({out}, width, rng));
    decoder_.emplace_back(w, b);
    width = out;
  }
  const int out = config_.decoder_output();
  const Var w = params_.add("dec.out.W", nn::fan_in_tensor({width, out}, width, rng));
  const Var b = params_.add("dec.out.b", nn::fan_in_tensor({out}, width, rng));
  decoder_.emplace_back(w, b);
}

Var Generator::encode(const Var& features, const Tensor& style_rows,
                      const Tensor& content_rows) const {
  if (features.value().rank() != 2 || features.dim(1) != config_.frame_width()) {
    throw ShapeError("encode: features " + nn::shape_string(features.shape()) + " for " +
                     std::to_string(config_.joints()) + " joints (expected width " +
                     std::to_string(config_.frame_width()) + ")");
  }
  Var x = nn::concat_cols({features, nn::constant(style_rows), nn::constant(content_rows)});
  for (const auto& [w, b] : encoder_) x = nn::dense(x, w, b, nn::Activation::relu);
  return x;
}

Var Generator::decode_raw(const Var& latent, const Tensor& target_rows) const {
  Var x = nn::concat_cols({latent, nn::constant(target_rows)});
  for (std::size_t k = 0; k + 1 < decoder_.size(); ++k) {
    x = nn::dense(x, decoder_[k].first, decoder_[k].second, nn::Activation::relu);
  }
  return nn::dense(x, decoder_.back().first, decoder_.back().second, nn::Activation::none);
}

DecodedMotion Generator::split_output(const Var& raw) const {
  const int j = config_.joints();
  DecodedMotion m;
  m.rotations = normalize_quaternions(nn::slice_cols(raw, 0, 4 * j));
  m.velocities = nn::slice_cols(raw, 4 * j, 3 * j);
  m.positions = fk_positions(m.rotations, config_.skeleton);
  return m;
}

BranchState Generator::initial_state(int branch, const std::vector<int>& contents) const {
  if (branch < 0 || branch >= branch_count()) throw RangeError("branch index out of range");
  const int rows = static_cast<int>(contents.size());
  const int h = config_.hidden;
  const int layers = config_.branch_layers(branch);
  BranchState state;
  if (config_.zero_init_states) {
    for (int l = 0; l < layers; ++l) {
      state.push_back({nn::constant(Tensor({rows, h})), nn::constant(Tensor({rows, h}))});
    }
    return state;
  }
  std::vector<int> index = contents;
  if (branch == 0) {
    for (int c : contents) {
      if (c < 0 || c >= config_.contents) throw RangeError("content index out of range");
    }
  } else {
    std::fill(index.begin(), index.end(), 0);
  }
  Var hb = nn::gather_rows(initial_[branch].first, index);
  Var cb = nn::gather_rows(initial_[branch].second, index);
  for (int l = 0; l < layers; ++l) {
    state.push_back({nn::slice_cols(hb, l * h, h), nn::slice_cols(cb, l * h, h)});
  }
  return state;
}

Var Generator::step(int branch, const Var& z, BranchState& state) const {
  const BranchWeights& bw = branches_.at(static_cast<std::size_t>(branch));
  if (state.size() != bw.layers.size()) throw LifecycleError("branch state has wrong depth");
  Var x = z;
  for (std::size_t l = 0; l < bw.layers.size(); ++l) {
    auto [out, next] = nn::lstm_step(x, state[l], bw.layers[l]);
    state[l] = next;
    x = out;
  }
  return x;
}

SequenceOutput run_sequences(const Generator& gen, const SequenceBatch& batch) {
  const ModelConfig& cfg = gen.config();
  const int n = batch.sequences;
  const int steps = batch.steps;
  if (n < 1 || steps < 1) throw ContractError("run_sequences: empty batch");
  if (batch.features.dim(0) != n * steps ||
      static_cast<int>(batch.source_styles.size()) != n ||
      static_cast<int>(batch.contents.size()) != n ||
      static_cast<int>(batch.target_styles.size()) != n) {
    throw ShapeError("run_sequences: batch fields disagree with " + std::to_string(n) +
                     " sequences of " + std::to_string(steps) + " steps");
  }
  auto repeat = [&](const std::vector<int>& per_seq) {
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(n) * steps);
    for (int t = 0; t < steps; ++t) rows.insert(rows.end(), per_seq.begin(), per_seq.end());
    return rows;
  };
  const Var z = gen.encode(nn::constant(batch.features),
                           one_hot_rows(repeat(batch.source_styles), cfg.styles),
                           one_hot_rows(repeat(batch.contents), cfg.contents));

  BranchState neutral = gen.initial_state(0, batch.contents);
  struct Residual {
    int branch;
    std::vector<int> rows;
    BranchState state;
  };
  std::vector<Residual> residuals;
  for (int s = 1; s < cfg.styles; ++s) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i) {
      if (batch.target_styles[i] == s) rows.push_back(i);
    }
    if (rows.empty()) continue;
    std::vector<int> contents;
    for (int i : rows) contents.push_back(batch.contents[i]);
    residuals.push_back({s, rows, gen.initial_state(s, contents)});
  }

  std::vector<Var> latents;
  latents.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    const Var zt = nn::slice_rows(z, t * n, n);
    Var out = gen.step(0, zt, neutral);
    for (Residual& r : residuals) {
      const bool all = static_cast<int>(r.rows.size()) == n;
      const Var zs = all ? zt : nn::gather_rows(zt, r.rows);
      const Var rs = gen.step(r.branch, zs, r.state);
      out = nn::add(out, all ? rs : nn::scatter_rows(rs, r.rows, n));
    }
    latents.push_back(out);
  }
  SequenceOutput result;
  result.latent = nn::concat_rows(latents);
  result.motion = gen.decode(result.latent, one_hot_rows(repeat(batch.target_styles), cfg.styles));
  return result;
}

Tensor pack_features(const std::vector<const std::vector<MotionFrame>*>& sequences) {
  if (sequences.empty()) throw ContractError("pack_features: no sequences");
  const int n = static_cast<int>(sequences.size());
  const int steps = static_cast<int>(sequences[0]->size());
  const int width = 10 * (*sequences[0])[0].joint_count();
  Tensor out({n * steps, width});
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sequences[i]->size()) != steps) {
      throw ShapeError("pack_features: sequences differ in length");
    }
    for (int t = 0; t < steps; ++t) {
      double* row = out.data().data() + static_cast<std::size_t>(t * n + i) * width;
      frame_features_into((*sequences[i])[t], std::span<double>(row, width));
    }
  }
  return out;
}

}  // namespace style_erd::model
