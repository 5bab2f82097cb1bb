#pragma once

#include "style_erd/nn/tensor.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace style_erd::nn {

class Var;

// Receives the node's own output and the upstream gradient; returns one
// gradient per input (a null Var where the input needs none). Backward rules
// are written with the differentiable ops themselves, so running them with
// recording enabled yields higher-order derivatives.
using BackwardFn = std::function<std::vector<Var>(const Var& self, const Var& grad)>;

struct Node : std::enable_shared_from_this<Node> {
  Tensor value;
  bool requires_grad = false;
  // Backward rule uses value-derived constants that are not piecewise
  // constant, so it cannot be differentiated again.
  bool first_order_only = false;
  const char* op = "leaf";
  std::vector<Var> inputs;
  BackwardFn backward;
};

// Handle to a node in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  Node* node() const noexcept { return node_.get(); }

  static Var from_node(std::shared_ptr<Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }

 private:
  std::shared_ptr<Node> node_;
};

bool grad_enabled() noexcept;

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. Records the inputs only when recording is enabled and
// some input requires grad; trips the numeric guard on NaN/Inf.
Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* op,
                bool first_order_only = false);

// Reverse-mode derivatives of a single-element `output` with respect to each
// of `wrt`. Inputs that do not influence the output receive zeros. With
// create_graph the returned gradients are themselves differentiable.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph = false);

inline std::vector<Var> grad(const Var& output, std::initializer_list<Var> wrt,
                             bool create_graph = false) {
  std::vector<Var> v(wrt);
  return grad(output, std::span<const Var>(v), create_graph);
}

}  // namespace style_erd::nn
