#include "style_erd/nn/layers.hpp"

#include "style_erd/errors.hpp"

namespace style_erd::nn {

Var dense(const Var& x, const Var& weight, const Var& bias, Activation act) {
  if (x.value().rank() != 2 || weight.value().rank() != 2 || x.dim(1) != weight.dim(0)) {
    throw ShapeError("dense: input " + shape_string(x.shape()) + " vs weight " +
                     shape_string(weight.shape()));
  }
  return activate(add_bias(matmul(x, weight), bias), act);
}

std::pair<Var, LstmState> lstm_step(const Var& x, const LstmState& state, const LstmWeights& w) {
  const int hidden = state.h.dim(1);
  if (state.c.shape() != state.h.shape()) {
    throw ShapeError("lstm_step: h " + shape_string(state.h.shape()) + " vs c " +
                     shape_string(state.c.shape()));
  }
  if (w.weight.dim(1) != 4 * hidden || w.weight.dim(0) != x.dim(1) + hidden ||
      x.dim(0) != state.h.dim(0)) {
    throw ShapeError("lstm_step: input " + shape_string(x.shape()) + ", state " +
                     shape_string(state.h.shape()) + ", weights " + shape_string(w.weight.shape()));
  }
  Var gates = add_bias(matmul(concat_cols({x, state.h}), w.weight), w.bias);
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(f, state.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, LstmState{h, c}};
}

}  // namespace style_erd::nn
