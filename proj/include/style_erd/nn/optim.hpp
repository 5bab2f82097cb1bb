#pragma once

#include "style_erd/nn/params.hpp"

#include <vector>

namespace style_erd::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Global-norm gradient clipping; <= 0 disables.
  double clip_norm = 0.0;
};

class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  // grads[i] pairs with store.vars()[i].
  void step(ParamStore& store, const std::vector<Var>& grads);
  long steps() const noexcept { return steps_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  AdamConfig config_;
  long steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

double global_norm(const std::vector<Var>& grads);

}  // namespace style_erd::nn
