#pragma once

#include "style_erd/nn/autograd.hpp"

#include <array>
#include <vector>

// Differentiable primitives. Unless noted otherwise every op supports
// higher-order differentiation.
namespace style_erd::nn {

Var constant(Tensor value);

// Elementwise, same shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var mul_const(const Var& a, const Tensor& c);

// op(a) * op(b) for rank-2 operands.
Var matmul(const Var& a, const Var& b, bool transpose_a = false, bool transpose_b = false);

// x[M,O] + b[O] broadcast over rows.
Var add_bias(const Var& x, const Var& b);
Var expand_rows(const Var& b, int rows);
Var sum_rows(const Var& x);

enum class Activation { none, relu, leaky_relu, tanh, sigmoid };
inline constexpr double kLeakySlope = 0.2;

Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope = kLeakySlope);
Var tanh(const Var& x);
Var sigmoid(const Var& x);
Var activate(const Var& x, Activation act);
Var abs(const Var& x);
Var pow_scalar(const Var& x, double p);
// arccos with the argument clamped to [-1, 1]; the derivative is taken as
// zero where |x| >= 1 - 1e-12. First-order only.
Var acos_clamped(const Var& x);

Var sum(const Var& x);
Var mean(const Var& x);
Var expand_scalar(const Var& s, const Shape& shape);
Var reshape(const Var& x, Shape shape);

// Rank-2 block ops.
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& x, int start, int len);
Var pad_cols(const Var& x, int start, int total);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& x, int start, int len);
Var pad_rows(const Var& x, int start, int total);
Var gather_rows(const Var& x, const std::vector<int>& rows);
Var scatter_rows(const Var& x, const std::vector<int>& rows, int total_rows);

// [M, G*k] -> [M, G] sums of consecutive column groups of width k, and its
// adjoint broadcast.
Var group_sum(const Var& x, int k);
Var group_expand(const Var& x, int k);

// Rank-3 [N, C, T] reductions and broadcasts.
Var sum_last(const Var& x);             // -> [N, C]
Var expand_last(const Var& x, int t);   // [N, C] -> [N, C, t]
Var sum_mid(const Var& x);              // -> [N, T]
Var expand_mid(const Var& x, int c);    // [N, T] -> [N, c, T]
Var permute3(const Var& x, std::array<int, 3> perm);

// Temporal convolution, x[N, Cin, T] * w[Cout, Cin, K] (cross-correlation,
// zero padding). No bias; see add_channel_bias.
struct ConvGeometry {
  int stride = 1;
  int padding = 0;
};
int conv_output_length(int length, int kernel, ConvGeometry geo);
Var conv1d(const Var& x, const Var& w, ConvGeometry geo);
// Adjoint of conv1d with respect to x (a transposed convolution): g[N, Cout,
// T'] -> [N, Cin, length].
Var conv1d_input_grad(const Var& g, const Var& w, int length, ConvGeometry geo);
// Adjoint of conv1d with respect to w: -> [Cout, Cin, kernel].
Var conv1d_weight_grad(const Var& x, const Var& g, int kernel, ConvGeometry geo);

Var add_channel_bias(const Var& x, const Var& b);
Var reduce_channel(const Var& x);                  // [N, C, T] -> [C]
Var expand_channel(const Var& b, int n, int t);    // [C] -> [N, C, T]

// Per-channel normalization over the last axis, no affine parameters.
Var instance_norm(const Var& x, double eps = 1e-5);

// Mean softmax cross-entropy over rows. First-order only.
Var cross_entropy(const Var& logits, const std::vector<int>& labels);

}  // namespace style_erd::nn
