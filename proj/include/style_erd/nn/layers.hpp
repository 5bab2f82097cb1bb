#pragma once

#include "style_erd/nn/ops.hpp"

#include <utility>

namespace style_erd::nn {

// act(x W + b) for x[N, I], W[I, O], b[O].
Var dense(const Var& x, const Var& weight, const Var& bias, Activation act);

struct LstmState {
  Var h;  // [N, H]
  Var c;  // [N, H]
};

// Fused gate weights: rows are [input; hidden], columns are the i, f, g, o
// gate blocks of width H.
struct LstmWeights {
  Var weight;  // [I + H, 4H]
  Var bias;    // [4H]
};

// Standard LSTM cell; returns (h', state').
std::pair<Var, LstmState> lstm_step(const Var& x, const LstmState& state, const LstmWeights& w);

}  // namespace style_erd::nn
