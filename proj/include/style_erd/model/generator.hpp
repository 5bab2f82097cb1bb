#pragma once

#include "style_erd/model/config.hpp"
#include "style_erd/motion.hpp"
#include "style_erd/nn/layers.hpp"
#include "style_erd/nn/params.hpp"

#include <cstdint>
#include <vector>

namespace style_erd::model {

using BranchState = std::vector<nn::LstmState>;  // one per layer

struct BranchWeights {
  std::vector<nn::LstmWeights> layers;
};

// Decoder output split into motion channels, each [M, .] row-aligned with
// the decoder input.
struct DecodedMotion {
  nn::Var rotations;   // [M, 4J], unit, w >= 0
  nn::Var positions;   // [M, 3J], root-relative, FK of rotations
  nn::Var velocities;  // [M, 3J]
};

// Label rows for conditioning: [M, n] blends of one-hot vectors.
nn::Tensor one_hot_rows(const std::vector<int>& indices, int count);

class Generator {
 public:
  Generator(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  // features [M, 10J]; labels [M, n_S] and [M, n_C] -> z [M, latent].
  nn::Var encode(const nn::Var& features, const nn::Tensor& style_rows,
                 const nn::Tensor& content_rows) const;
  // z' [M, latent]; target label rows [M, n_S] -> raw [M, 7J].
  nn::Var decode_raw(const nn::Var& latent, const nn::Tensor& target_rows) const;
  DecodedMotion split_output(const nn::Var& raw) const;
  DecodedMotion decode(const nn::Var& latent, const nn::Tensor& target_rows) const {
    return split_output(decode_raw(latent, target_rows));
  }

  // Learned initial states for `rows` sequences. Branch 0 selects per row by
  // content index; style branches share their single state.
  BranchState initial_state(int branch, const std::vector<int>& contents) const;
  // One step of a branch stack; returns the top layer's output.
  nn::Var step(int branch, const nn::Var& z, BranchState& state) const;

  int branch_count() const noexcept { return static_cast<int>(branches_.size()); }

 private:
  ModelConfig config_;
  nn::ParamStore params_;
  std::vector<std::pair<nn::Var, nn::Var>> encoder_;
  std::vector<std::pair<nn::Var, nn::Var>> decoder_;
  std::vector<BranchWeights> branches_;
  // Per branch: [rows, layers * hidden] banks, undefined with zero_init_states.
  std::vector<std::pair<nn::Var, nn::Var>> initial_;
};

// Training-time unrolled forward over whole windows.
struct SequenceBatch {
  nn::Tensor features;            // [T * N, 10J], row t * N + n
  std::vector<int> source_styles;  // per sequence
  std::vector<int> contents;       // per sequence
  std::vector<int> target_styles;  // per sequence
  int sequences = 0;
  int steps = 0;
};

struct SequenceOutput {
  DecodedMotion motion;  // rows t * N + n
  nn::Var latent;        // z' [T * N, latent]
};

// z'_t = r0(z_t) + r_target(z_t) (no residual for neutral targets), states
// initialised from the learned banks.
SequenceOutput run_sequences(const Generator& gen, const SequenceBatch& batch);

// Packs windows of frames (all length T) into t-major features.
nn::Tensor pack_features(const std::vector<const std::vector<MotionFrame>*>& sequences);

}  // namespace style_erd::model
