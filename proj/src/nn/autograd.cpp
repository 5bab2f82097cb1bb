#include "style_erd/nn/autograd.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>

namespace style_erd::nn {

namespace {

thread_local bool g_grad_enabled = true;

class GradModeScope {
 public:
  explicit GradModeScope(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }
  ~GradModeScope() { g_grad_enabled = previous_; }

 private:
  bool previous_;
};

// Post-order over nodes that require grad; inputs precede their consumers.
std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].node();
      if (child && child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  return order;
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Tensor value, std::vector<Var> inputs, BackwardFn backward, const char* op,
                bool first_order_only) {
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled) {
    bool any = false;
    for (const Var& in : inputs) any = any || in.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->first_order_only = first_order_only;
      node->inputs = std::move(inputs);
      node->backward = std::move(backward);
    }
  }
  return Var::from_node(std::move(node));
}

std::vector<Var> grad(const Var& output, std::span<const Var> wrt, bool create_graph) {
  if (!output.defined() || output.size() != 1) {
    throw ContractError("grad() requires a scalar output, got shape " +
                        (output.defined() ? shape_string(output.shape()) : std::string("<null>")));
  }
  std::vector<Var> result;
  result.reserve(wrt.size());
  if (!output.requires_grad()) {
    for (const Var& w : wrt) result.emplace_back(Tensor(w.shape(), 0.0));
    return result;
  }

  GradModeScope mode(create_graph);
  std::unordered_map<Node*, Var> grads;
  grads.emplace(output.node(), Var(Tensor(output.shape(), 1.0)));

  std::unordered_set<Node*> targets;
  for (const Var& w : wrt) targets.insert(w.node());

  const std::vector<Node*> order = topological_order(output.node());
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;  // leaf
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    if (create_graph && node->first_order_only) {
      throw ContractError(std::string("op '") + node->op +
                          "' does not support higher-order differentiation");
    }
    const Var upstream = found->second;
    // Leaves reached only through this node keep their gradient; intermediate
    // gradients are released once consumed unless requested.
    if (!targets.count(node)) grads.erase(found);

    Var self = Var::from_node(node->shared_from_this());
    std::vector<Var> input_grads = node->backward(self, upstream);
    for (std::size_t i = 0; i < node->inputs.size(); ++i) {
      const Var& in = node->inputs[i];
      if (!in.requires_grad() || i >= input_grads.size() || !input_grads[i].defined()) continue;
      auto slot = grads.find(in.node());
      if (slot == grads.end()) {
        grads.emplace(in.node(), input_grads[i]);
      } else {
        slot->second = add(slot->second, input_grads[i]);
      }
    }
  }

  for (const Var& w : wrt) {
    auto found = grads.find(w.node());
    if (found != grads.end()) {
      result.push_back(found->second);
    } else {
      result.emplace_back(Tensor(w.shape(), 0.0));
    }
  }
  return result;
}

}  // namespace style_erd::nn
