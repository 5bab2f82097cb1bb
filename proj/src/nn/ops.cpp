#include "style_erd/nn/ops.hpp"

#include "style_erd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace style_erd::nn {

namespace {

void require_rank(const Var& x, int rank, const char* op) {
  if (x.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(x.shape()));
  }
}

void require_same(const Var& a, const Var& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

template <typename F>
Tensor map_values(const Tensor& x, F f) {
  Tensor out(x.shape());
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

Var constant(Tensor value) { return Var(std::move(value), false); }

Var add(const Var& a, const Var& b) {
  require_same(a, b, "add");
  Tensor out(a.shape());
  out.matrix() = a.value().matrix() + b.value().matrix();
  return make_result(std::move(out), {a, b},
                     [](const Var&, const Var& g) { return std::vector<Var>{g, g}; }, "add");
}

Var sub(const Var& a, const Var& b) {
  require_same(a, b, "sub");
  Tensor out(a.shape());
  out.matrix() = a.value().matrix() - b.value().matrix();
  return make_result(std::move(out), {a, b},
                     [](const Var&, const Var& g) { return std::vector<Var>{g, neg(g)}; }, "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same(a, b, "mul");
  Tensor out(a.shape());
  out.matrix() = a.value().matrix().cwiseProduct(b.value().matrix());
  return make_result(std::move(out), {a, b},
                     [](const Var& self, const Var& g) {
                       const auto& in = self.node()->inputs;
                       return std::vector<Var>{mul(g, in[1]), mul(g, in[0])};
                     },
                     "mul");
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double s) {
  Tensor out(a.shape());
  out.matrix() = a.value().matrix() * s;
  return make_result(std::move(out), {a},
                     [s](const Var&, const Var& g) { return std::vector<Var>{scale(g, s)}; },
                     "scale");
}

Var add_scalar(const Var& a, double s) {
  Tensor out = map_values(a.value(), [s](double v) { return v + s; });
  return make_result(std::move(out), {a},
                     [](const Var&, const Var& g) { return std::vector<Var>{g}; }, "add_scalar");
}

Var mul_const(const Var& a, const Tensor& c) {
  require_same_shape(a.value(), c, "mul_const");
  Tensor out(a.shape());
  out.matrix() = a.value().matrix().cwiseProduct(c.matrix());
  return make_result(std::move(out), {a},
                     [c](const Var&, const Var& g) { return std::vector<Var>{mul_const(g, c)}; },
                     "mul_const");
}

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int m = ta ? a.dim(1) : a.dim(0);
  const int ka = ta ? a.dim(0) : a.dim(1);
  const int kb = tb ? b.dim(1) : b.dim(0);
  const int n = tb ? b.dim(0) : b.dim(1);
  if (ka != kb) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_string(a.shape()) +
                     (ta ? "^T" : "") + " x " + shape_string(b.shape()) + (tb ? "^T" : ""));
  }
  Tensor out({m, n});
  auto am = a.value().matrix();
  auto bm = b.value().matrix();
  auto om = out.matrix();
  if (!ta && !tb) {
    om.noalias() = am * bm;
  } else if (ta && !tb) {
    om.noalias() = am.transpose() * bm;
  } else if (!ta && tb) {
    om.noalias() = am * bm.transpose();
  } else {
    om.noalias() = am.transpose() * bm.transpose();
  }
  return make_result(std::move(out), {a, b},
                     [ta, tb](const Var& self, const Var& g) {
                       const Var& A = self.node()->inputs[0];
                       const Var& B = self.node()->inputs[1];
                       Var ga, gb;
                       if (A.requires_grad()) ga = ta ? matmul(B, g, tb, true) : matmul(g, B, false, !tb);
                       if (B.requires_grad()) gb = tb ? matmul(g, A, true, ta) : matmul(A, g, !ta, false);
                       return std::vector<Var>{ga, gb};
                     },
                     "matmul");
}

Var add_bias(const Var& x, const Var& b) {
  require_rank(x, 2, "add_bias");
  require_rank(b, 1, "add_bias");
  if (x.dim(1) != b.dim(0)) {
    throw ShapeError("add_bias: " + shape_string(x.shape()) + " vs bias " +
                     shape_string(b.shape()));
  }
  Tensor out(x.shape());
  out.matrix() = x.value().matrix().rowwise() + b.value().matrix().row(0);
  return make_result(std::move(out), {x, b},
                     [](const Var&, const Var& g) { return std::vector<Var>{g, sum_rows(g)}; },
                     "add_bias");
}

Var expand_rows(const Var& b, int rows) {
  require_rank(b, 1, "expand_rows");
  const int cols = b.dim(0);
  Tensor out({rows, cols});
  out.matrix() = b.value().matrix().replicate(rows, 1);
  return make_result(std::move(out), {b},
                     [](const Var&, const Var& g) { return std::vector<Var>{sum_rows(g)}; },
                     "expand_rows");
}

Var sum_rows(const Var& x) {
  require_rank(x, 2, "sum_rows");
  const int rows = x.dim(0);
  Tensor out({x.dim(1)});
  out.matrix() = x.value().matrix().colwise().sum();
  return make_result(std::move(out), {x},
                     [rows](const Var&, const Var& g) {
                       return std::vector<Var>{expand_rows(g, rows)};
                     },
                     "sum_rows");
}

Var relu(const Var& x) {
  Tensor mask = map_values(x.value(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
  Tensor out = map_values(x.value(), [](double v) { return v > 0.0 ? v : 0.0; });
  return make_result(std::move(out), {x},
                     [mask = std::move(mask)](const Var&, const Var& g) {
                       return std::vector<Var>{mul_const(g, mask)};
                     },
                     "relu");
}

Var leaky_relu(const Var& x, double slope) {
  Tensor mask = map_values(x.value(), [slope](double v) { return v > 0.0 ? 1.0 : slope; });
  Tensor out = map_values(x.value(), [slope](double v) { return v > 0.0 ? v : slope * v; });
  return make_result(std::move(out), {x},
                     [mask = std::move(mask)](const Var&, const Var& g) {
                       return std::vector<Var>{mul_const(g, mask)};
                     },
                     "leaky_relu");
}

Var tanh(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) { return std::tanh(v); });
  return make_result(std::move(out), {x},
                     [](const Var& self, const Var& g) {
                       // d tanh = 1 - y^2
                       return std::vector<Var>{mul(g, add_scalar(neg(mul(self, self)), 1.0))};
                     },
                     "tanh");
}

Var sigmoid(const Var& x) {
  Tensor out = map_values(x.value(), [](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  });
  return make_result(std::move(out), {x},
                     [](const Var& self, const Var& g) {
                       return std::vector<Var>{mul(g, mul(self, add_scalar(neg(self), 1.0)))};
                     },
                     "sigmoid");
}

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::none:
      return x;
    case Activation::relu:
      return relu(x);
    case Activation::leaky_relu:
      return leaky_relu(x);
    case Activation::tanh:
      return tanh(x);
    case Activation::sigmoid:
      return sigmoid(x);
  }
  return x;
}

Var abs(const Var& x) {
  Tensor sign = map_values(x.value(), [](double v) { return v < 0.0 ? -1.0 : 1.0; });
  Tensor out = map_values(x.value(), [](double v) { return std::fabs(v); });
  return make_result(std::move(out), {x},
                     [sign = std::move(sign)](const Var&, const Var& g) {
                       return std::vector<Var>{mul_const(g, sign)};
                     },
                     "abs");
}

Var pow_scalar(const Var& x, double p) {
  Tensor out = map_values(x.value(), [p](double v) { return std::pow(v, p); });
  return make_result(std::move(out), {x},
                     [p](const Var& self, const Var& g) {
                       const Var& in = self.node()->inputs[0];
                       return std::vector<Var>{mul(g, scale(pow_scalar(in, p - 1.0), p))};
                     },
                     "pow_scalar");
}

Var acos_clamped(const Var& x) {
  constexpr double kEdge = 1.0 - 1e-12;
  Tensor deriv = map_values(x.value(), [](double v) {
    return std::fabs(v) >= kEdge ? 0.0 : -1.0 / std::sqrt(1.0 - v * v);
  });
  Tensor out = map_values(x.value(), [](double v) { return std::acos(std::clamp(v, -1.0, 1.0)); });
  return make_result(std::move(out), {x},
                     [deriv = std::move(deriv)](const Var&, const Var& g) {
                       return std::vector<Var>{mul_const(g, deriv)};
                     },
                     "acos_clamped", /*first_order_only=*/true);
}

Var sum(const Var& x) {
  Tensor out = Tensor::scalar(x.value().matrix().sum());
  Shape shape = x.shape();
  return make_result(std::move(out), {x},
                     [shape](const Var&, const Var& g) {
                       return std::vector<Var>{expand_scalar(g, shape)};
                     },
                     "sum");
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Var expand_scalar(const Var& s, const Shape& shape) {
  if (s.size() != 1) throw ShapeError("expand_scalar: input is not a scalar");
  Tensor out(shape, s.value()[0]);
  return make_result(std::move(out), {s},
                     [](const Var&, const Var& g) { return std::vector<Var>{sum(g)}; },
                     "expand_scalar");
}

Var reshape(const Var& x, Shape shape) {
  Shape original = x.shape();
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result(std::move(out), {x},
                     [original](const Var&, const Var& g) {
                       return std::vector<Var>{reshape(g, original)};
                     },
                     "reshape");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int rows = parts[0].dim(0);
  int total = 0;
  std::vector<int> widths;
  for (const Var& p : parts) {
    require_rank(p, 2, "concat_cols");
    if (p.dim(0) != rows) {
      throw ShapeError("concat_cols: row count mismatch " + shape_string(parts[0].shape()) +
                       " vs " + shape_string(p.shape()));
    }
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  Tensor out({rows, total});
  auto om = out.matrix();
  int offset = 0;
  for (const Var& p : parts) {
    om.middleCols(offset, p.dim(1)) = p.value().matrix();
    offset += p.dim(1);
  }
  return make_result(std::move(out), parts,
                     [widths](const Var&, const Var& g) {
                       std::vector<Var> grads;
                       int off = 0;
                       for (int w : widths) {
                         grads.push_back(slice_cols(g, off, w));
                         off += w;
                       }
                       return grads;
                     },
                     "concat_cols");
}

Var slice_cols(const Var& x, int start, int len) {
  require_rank(x, 2, "slice_cols");
  const int total = x.dim(1);
  if (start < 0 || len <= 0 || start + len > total) {
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") outside " + shape_string(x.shape()));
  }
  Tensor out({x.dim(0), len});
  out.matrix() = x.value().matrix().middleCols(start, len);
  return make_result(std::move(out), {x},
                     [start, total](const Var&, const Var& g) {
                       return std::vector<Var>{pad_cols(g, start, total)};
                     },
                     "slice_cols");
}

Var pad_cols(const Var& x, int start, int total) {
  require_rank(x, 2, "pad_cols");
  const int len = x.dim(1);
  if (start < 0 || start + len > total) throw ShapeError("pad_cols: slice exceeds total width");
  Tensor out({x.dim(0), total});
  out.matrix().middleCols(start, len) = x.value().matrix();
  return make_result(std::move(out), {x},
                     [start, len](const Var&, const Var& g) {
                       return std::vector<Var>{slice_cols(g, start, len)};
                     },
                     "pad_cols");
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const int cols = parts[0].dim(1);
  int total = 0;
  std::vector<int> heights;
  for (const Var& p : parts) {
    require_rank(p, 2, "concat_rows");
    if (p.dim(1) != cols) {
      throw ShapeError("concat_rows: column count mismatch " + shape_string(parts[0].shape()) +
                       " vs " + shape_string(p.shape()));
    }
    heights.push_back(p.dim(0));
    total += p.dim(0);
  }
  Tensor out({total, cols});
  auto dst = out.data();
  std::size_t offset = 0;
  for (const Var& p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += src.size();
  }
  return make_result(std::move(out), parts,
                     [heights](const Var&, const Var& g) {
                       std::vector<Var> grads;
                       int off = 0;
                       for (int h : heights) {
                         grads.push_back(slice_rows(g, off, h));
                         off += h;
                       }
                       return grads;
                     },
                     "concat_rows");
}

Var slice_rows(const Var& x, int start, int len) {
  require_rank(x, 2, "slice_rows");
  const int total = x.dim(0);
  if (start < 0 || len <= 0 || start + len > total) {
    throw ShapeError("slice_rows: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") outside " + shape_string(x.shape()));
  }
  const int cols = x.dim(1);
  auto src = x.value().data().subspan(static_cast<std::size_t>(start) * cols,
                                      static_cast<std::size_t>(len) * cols);
  Tensor out({len, cols}, std::vector<double>(src.begin(), src.end()));
  return make_result(std::move(out), {x},
                     [start, total](const Var&, const Var& g) {
                       return std::vector<Var>{pad_rows(g, start, total)};
                     },
                     "slice_rows");
}

Var pad_rows(const Var& x, int start, int total) {
  require_rank(x, 2, "pad_rows");
  const int len = x.dim(0);
  const int cols = x.dim(1);
  if (start < 0 || start + len > total) throw ShapeError("pad_rows: slice exceeds total height");
  Tensor out({total, cols});
  auto src = x.value().data();
  std::copy(src.begin(), src.end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(start) * cols);
  return make_result(std::move(out), {x},
                     [start, len](const Var&, const Var& g) {
                       return std::vector<Var>{slice_rows(g, start, len)};
                     },
                     "pad_rows");
}

Var gather_rows(const Var& x, const std::vector<int>& rows) {
  require_rank(x, 2, "gather_rows");
  const int total = x.dim(0);
  const int cols = x.dim(1);
  if (rows.empty()) throw ShapeError("gather_rows: empty index list");
  Tensor out({static_cast<int>(rows.size()), cols});
  auto om = out.matrix();
  auto xm = x.value().matrix();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= total) throw ShapeError("gather_rows: index out of range");
    om.row(static_cast<Eigen::Index>(i)) = xm.row(rows[i]);
  }
  return make_result(std::move(out), {x},
                     [rows, total](const Var&, const Var& g) {
                       return std::vector<Var>{scatter_rows(g, rows, total)};
                     },
                     "gather_rows");
}

Var scatter_rows(const Var& x, const std::vector<int>& rows, int total_rows) {
  require_rank(x, 2, "scatter_rows");
  if (static_cast<int>(rows.size()) != x.dim(0)) {
    throw ShapeError("scatter_rows: index count does not match rows of " +
                     shape_string(x.shape()));
  }
  Tensor out({total_rows, x.dim(1)});
  auto om = out.matrix();
  auto xm = x.value().matrix();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= total_rows) throw ShapeError("scatter_rows: index out of range");
    om.row(rows[i]) += xm.row(static_cast<Eigen::Index>(i));
  }
  return make_result(std::move(out), {x},
                     [rows](const Var&, const Var& g) {
                       return std::vector<Var>{gather_rows(g, rows)};
                     },
                     "scatter_rows");
}

Var group_sum(const Var& x, int k) {
  require_rank(x, 2, "group_sum");
  if (k <= 0 || x.dim(1) % k != 0) {
    throw ShapeError("group_sum: width " + std::to_string(x.dim(1)) + " not divisible by " +
                     std::to_string(k));
  }
  const int rows = x.dim(0);
  const int groups = x.dim(1) / k;
  Tensor out({rows, groups});
  const auto& xv = x.value();
  for (int r = 0; r < rows; ++r) {
    for (int g = 0; g < groups; ++g) {
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += xv.at(r, g * k + j);
      out.at(r, g) = s;
    }
  }
  return make_result(std::move(out), {x},
                     [k](const Var&, const Var& g) {
                       return std::vector<Var>{group_expand(g, k)};
                     },
                     "group_sum");
}

Var group_expand(const Var& x, int k) {
  require_rank(x, 2, "group_expand");
  const int rows = x.dim(0);
  const int groups = x.dim(1);
  Tensor out({rows, groups * k});
  const auto& xv = x.value();
  for (int r = 0; r < rows; ++r) {
    for (int g = 0; g < groups; ++g) {
      for (int j = 0; j < k; ++j) out.at(r, g * k + j) = xv.at(r, g);
    }
  }
  return make_result(std::move(out), {x},
                     [k](const Var&, const Var& g) {
                       return std::vector<Var>{group_sum(g, k)};
                     },
                     "group_expand");
}

Var sum_last(const Var& x) {
  require_rank(x, 3, "sum_last");
  const int t = x.dim(2);
  Tensor out({x.dim(0), x.dim(1)});
  ConstMatrixMap xm(x.value().data().data(), static_cast<Eigen::Index>(x.dim(0)) * x.dim(1), t);
  Eigen::Map<Eigen::VectorXd>(out.data().data(), xm.rows()) = xm.rowwise().sum();
  return make_result(std::move(out), {x},
                     [t](const Var&, const Var& g) {
                       return std::vector<Var>{expand_last(g, t)};
                     },
                     "sum_last");
}

Var expand_last(const Var& x, int t) {
  require_rank(x, 2, "expand_last");
  const int n = x.dim(0);
  const int c = x.dim(1);
  Tensor out({n, c, t});
  const auto& xv = x.value();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      const double v = xv.at(i, j);
      for (int k = 0; k < t; ++k) out.at(i, j, k) = v;
    }
  }
  return make_result(std::move(out), {x},
                     [](const Var&, const Var& g) { return std::vector<Var>{sum_last(g)}; },
                     "expand_last");
}

Var sum_mid(const Var& x) {
  require_rank(x, 3, "sum_mid");
  const int n = x.dim(0);
  const int c = x.dim(1);
  const int t = x.dim(2);
  Tensor out({n, t});
  const auto& xv = x.value();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      for (int k = 0; k < t; ++k) out.at(i, k) += xv.at(i, j, k);
    }
  }
  return make_result(std::move(out), {x},
                     [c](const Var&, const Var& g) {
                       return std::vector<Var>{expand_mid(g, c)};
                     },
                     "sum_mid");
}

Var expand_mid(const Var& x, int c) {
  require_rank(x, 2, "expand_mid");
  const int n = x.dim(0);
  const int t = x.dim(1);
  Tensor out({n, c, t});
  const auto& xv = x.value();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      for (int k = 0; k < t; ++k) out.at(i, j, k) = xv.at(i, k);
    }
  }
  return make_result(std::move(out), {x},
                     [](const Var&, const Var& g) { return std::vector<Var>{sum_mid(g)}; },
                     "expand_mid");
}

Var permute3(const Var& x, std::array<int, 3> perm) {
  require_rank(x, 3, "permute3");
  const Shape& in_shape = x.shape();
  Shape out_shape = {in_shape[perm[0]], in_shape[perm[1]], in_shape[perm[2]]};
  Tensor out(out_shape);
  const auto& xv = x.value();
  std::array<int, 3> idx{};
  for (idx[0] = 0; idx[0] < in_shape[0]; ++idx[0]) {
    for (idx[1] = 0; idx[1] < in_shape[1]; ++idx[1]) {
      for (idx[2] = 0; idx[2] < in_shape[2]; ++idx[2]) {
        out.at(idx[perm[0]], idx[perm[1]], idx[perm[2]]) = xv.at(idx[0], idx[1], idx[2]);
      }
    }
  }
  std::array<int, 3> inverse{};
  for (int i = 0; i < 3; ++i) inverse[perm[i]] = i;
  return make_result(std::move(out), {x},
                     [inverse](const Var&, const Var& g) {
                       return std::vector<Var>{permute3(g, inverse)};
                     },
                     "permute3");
}

int conv_output_length(int length, int kernel, ConvGeometry geo) {
  if (geo.stride <= 0 || geo.padding < 0 || length + 2 * geo.padding < kernel) {
    throw ShapeError("conv1d: invalid geometry (length " + std::to_string(length) + ", kernel " +
                     std::to_string(kernel) + ", stride " + std::to_string(geo.stride) +
                     ", padding " + std::to_string(geo.padding) + ")");
  }
  return (length + 2 * geo.padding - kernel) / geo.stride + 1;
}

namespace {

// Unfolds all samples of x [n, channels, length] into columns
// [channels * kernel, n * out_len]; column i * out_len + t holds the
// receptive field of output step t of sample i.
void im2col(const double* x, int n, int channels, int length, int kernel, int out_len,
            ConvGeometry geo, RowMatrix& cols) {
  cols.setZero(static_cast<Eigen::Index>(channels) * kernel, static_cast<Eigen::Index>(n) * out_len);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      const double* row = x + (static_cast<std::size_t>(i) * channels + c) * length;
      for (int k = 0; k < kernel; ++k) {
        double* dst = &cols(c * kernel + k, static_cast<Eigen::Index>(i) * out_len);
        for (int t = 0; t < out_len; ++t) {
          const int src = t * geo.stride + k - geo.padding;
          if (src >= 0 && src < length) dst[t] = row[src];
        }
      }
    }
  }
}

void col2im_add(const RowMatrix& cols, int n, int channels, int length, int kernel, int out_len,
                ConvGeometry geo, double* x) {
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) {
      double* row = x + (static_cast<std::size_t>(i) * channels + c) * length;
      for (int k = 0; k < kernel; ++k) {
        const double* src = &cols(c * kernel + k, static_cast<Eigen::Index>(i) * out_len);
        for (int t = 0; t < out_len; ++t) {
          const int dst = t * geo.stride + k - geo.padding;
          if (dst >= 0 && dst < length) row[dst] += src[t];
        }
      }
    }
  }
}

// [n, c, t] <-> [c, n * t].
RowMatrix stack_samples(const Tensor& x) {
  const int n = x.dim(0), c = x.dim(1), t = x.dim(2);
  RowMatrix m(c, static_cast<Eigen::Index>(n) * t);
  for (int i = 0; i < n; ++i) {
    m.middleCols(static_cast<Eigen::Index>(i) * t, t) =
        ConstMatrixMap(x.data().data() + static_cast<std::size_t>(i) * c * t, c, t);
  }
  return m;
}

void unstack_samples(const RowMatrix& m, Tensor& x) {
  const int n = x.dim(0), c = x.dim(1), t = x.dim(2);
  for (int i = 0; i < n; ++i) {
    MatrixMap(x.data().data() + static_cast<std::size_t>(i) * c * t, c, t) =
        m.middleCols(static_cast<Eigen::Index>(i) * t, t);
  }
}

bool wants_grad(const Var& self, std::size_t input) {
  return self.node()->inputs[input].requires_grad();
}

}  // namespace

Var conv1d(const Var& x, const Var& w, ConvGeometry geo) {
  require_rank(x, 3, "conv1d");
  require_rank(w, 3, "conv1d");
  const int n = x.dim(0);
  const int cin = x.dim(1);
  const int length = x.dim(2);
  const int cout = w.dim(0);
  const int kernel = w.dim(2);
  if (w.dim(1) != cin) {
    throw ShapeError("conv1d: input " + shape_string(x.shape()) + " vs kernels " +
                     shape_string(w.shape()));
  }
  const int out_len = conv_output_length(length, kernel, geo);
  Tensor out({n, cout, out_len});
  ConstMatrixMap wm(w.value().data().data(), cout, static_cast<Eigen::Index>(cin) * kernel);
  RowMatrix cols;
  im2col(x.value().data().data(), n, cin, length, kernel, out_len, geo, cols);
  const RowMatrix y = wm * cols;
  unstack_samples(y, out);
  return make_result(std::move(out), {x, w},
                     [length, kernel, geo](const Var& self, const Var& g) {
                       const Var& X = self.node()->inputs[0];
                       const Var& W = self.node()->inputs[1];
                       return std::vector<Var>{
                           wants_grad(self, 0) ? conv1d_input_grad(g, W, length, geo) : Var(),
                           wants_grad(self, 1) ? conv1d_weight_grad(X, g, kernel, geo) : Var()};
                     },
                     "conv1d");
}

Var conv1d_input_grad(const Var& g, const Var& w, int length, ConvGeometry geo) {
  require_rank(g, 3, "conv1d_input_grad");
  require_rank(w, 3, "conv1d_input_grad");
  const int n = g.dim(0);
  const int cout = w.dim(0);
  const int cin = w.dim(1);
  const int kernel = w.dim(2);
  const int out_len = conv_output_length(length, kernel, geo);
  if (g.dim(1) != cout || g.dim(2) != out_len) {
    throw ShapeError("conv1d_input_grad: gradient " + shape_string(g.shape()) +
                     " inconsistent with kernels " + shape_string(w.shape()) + " and length " +
                     std::to_string(length));
  }
  Tensor out({n, cin, length});
  ConstMatrixMap wm(w.value().data().data(), cout, static_cast<Eigen::Index>(cin) * kernel);
  const RowMatrix cols = wm.transpose() * stack_samples(g.value());
  col2im_add(cols, n, cin, length, kernel, out_len, geo, out.data().data());
  return make_result(std::move(out), {g, w},
                     [geo](const Var& self, const Var& h) {
                       const Var& G = self.node()->inputs[0];
                       const Var& W = self.node()->inputs[1];
                       return std::vector<Var>{
                           wants_grad(self, 0) ? conv1d(h, W, geo) : Var(),
                           wants_grad(self, 1) ? conv1d_weight_grad(h, G, W.dim(2), geo) : Var()};
                     },
                     "conv1d_input_grad");
}

Var conv1d_weight_grad(const Var& x, const Var& g, int kernel, ConvGeometry geo) {
  require_rank(x, 3, "conv1d_weight_grad");
  require_rank(g, 3, "conv1d_weight_grad");
  const int n = x.dim(0);
  const int cin = x.dim(1);
  const int length = x.dim(2);
  const int cout = g.dim(1);
  const int out_len = conv_output_length(length, kernel, geo);
  if (g.dim(0) != n || g.dim(2) != out_len) {
    throw ShapeError("conv1d_weight_grad: input " + shape_string(x.shape()) + " vs gradient " +
                     shape_string(g.shape()));
  }
  Tensor out({cout, cin, kernel});
  MatrixMap om(out.data().data(), cout, static_cast<Eigen::Index>(cin) * kernel);
  RowMatrix cols;
  im2col(x.value().data().data(), n, cin, length, kernel, out_len, geo, cols);
  om.noalias() = stack_samples(g.value()) * cols.transpose();
  return make_result(std::move(out), {x, g},
                     [length, geo](const Var& self, const Var& h) {
                       const Var& X = self.node()->inputs[0];
                       const Var& G = self.node()->inputs[1];
                       return std::vector<Var>{
                           wants_grad(self, 0) ? conv1d_input_grad(G, h, length, geo) : Var(),
                           wants_grad(self, 1) ? conv1d(X, h, geo) : Var()};
                     },
                     "conv1d_weight_grad");
}

Var add_channel_bias(const Var& x, const Var& b) {
  require_rank(x, 3, "add_channel_bias");
  require_rank(b, 1, "add_channel_bias");
  if (x.dim(1) != b.dim(0)) {
    throw ShapeError("add_channel_bias: " + shape_string(x.shape()) + " vs bias " +
                     shape_string(b.shape()));
  }
  Tensor out = x.value();
  const int n = x.dim(0), c = x.dim(1), t = x.dim(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      const double v = b.value()[static_cast<std::size_t>(j)];
      for (int k = 0; k < t; ++k) out.at(i, j, k) += v;
    }
  }
  return make_result(std::move(out), {x, b},
                     [](const Var&, const Var& g) {
                       return std::vector<Var>{g, reduce_channel(g)};
                     },
                     "add_channel_bias");
}

Var reduce_channel(const Var& x) {
  require_rank(x, 3, "reduce_channel");
  const int n = x.dim(0), c = x.dim(1), t = x.dim(2);
  Tensor out({c});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      double s = 0.0;
      for (int k = 0; k < t; ++k) s += x.value().at(i, j, k);
      out[static_cast<std::size_t>(j)] += s;
    }
  }
  return make_result(std::move(out), {x},
                     [n, t](const Var&, const Var& g) {
                       return std::vector<Var>{expand_channel(g, n, t)};
                     },
                     "reduce_channel");
}

Var expand_channel(const Var& b, int n, int t) {
  require_rank(b, 1, "expand_channel");
  const int c = b.dim(0);
  Tensor out({n, c, t});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) {
      for (int k = 0; k < t; ++k) out.at(i, j, k) = b.value()[static_cast<std::size_t>(j)];
    }
  }
  return make_result(std::move(out), {b},
                     [](const Var&, const Var& g) { return std::vector<Var>{reduce_channel(g)}; },
                     "expand_channel");
}

Var instance_norm(const Var& x, double eps) {
  require_rank(x, 3, "instance_norm");
  const int t = x.dim(2);
  if (t < 2) {
    throw ShapeError("instance_norm: temporal axis of length " + std::to_string(t) +
                     " is degenerate (need >= 2)");
  }
  const double inv_t = 1.0 / t;
  Var centered = sub(x, expand_last(scale(sum_last(x), inv_t), t));
  Var variance = scale(sum_last(mul(centered, centered)), inv_t);
  Var inv_std = pow_scalar(add_scalar(variance, eps), -0.5);
  return mul(centered, expand_last(inv_std, t));
}

Var cross_entropy(const Var& logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "cross_entropy");
  const int rows = logits.dim(0);
  const int classes = logits.dim(1);
  if (static_cast<int>(labels.size()) != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(rows) + " rows");
  }
  Tensor deriv({rows, classes});
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (labels[r] < 0 || labels[r] >= classes) throw RangeError("cross_entropy: label out of range");
    double mx = logits.value().at(r, 0);
    for (int c = 1; c < classes; ++c) mx = std::max(mx, logits.value().at(r, c));
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += std::exp(logits.value().at(r, c) - mx);
    for (int c = 0; c < classes; ++c) {
      const double p = std::exp(logits.value().at(r, c) - mx) / z;
      deriv.at(r, c) = (p - (c == labels[r] ? 1.0 : 0.0)) / rows;
    }
    loss += -(logits.value().at(r, labels[r]) - mx - std::log(z));
  }
  return make_result(Tensor::scalar(loss / rows), {logits},
                     [deriv = std::move(deriv)](const Var&, const Var& g) {
                       return std::vector<Var>{mul_const(expand_scalar(g, deriv.shape()), deriv)};
                     },
                     "cross_entropy", /*first_order_only=*/true);
}

}  // namespace style_erd::nn
