#include "style_erd/nn/optim.hpp"

#include "style_erd/errors.hpp"

#include <cmath>

namespace style_erd::nn {

double global_norm(const std::vector<Var>& grads) {
  double s = 0.0;
  for (const Var& g : grads) s += g.value().matrix().squaredNorm();
  return std::sqrt(s);
}

void Adam::step(ParamStore& store, const std::vector<Var>& grads) {
  const auto& vars = store.vars();
  if (grads.size() != vars.size()) {
    throw ShapeError("Adam::step: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(vars.size()) + " parameters");
  }
  if (m_.empty()) {
    for (const Var& p : vars) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  }
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = global_norm(grads);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Var param = vars[i];
    require_same_shape(param.value(), grads[i].value(), store.names()[i].c_str());
    auto p = param.mutable_value().data();
    auto g = grads[i].value().data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] * clip;
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * gk;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * gk * gk;
      p[k] -= config_.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + config_.eps);
    }
  }
}

}  // namespace style_erd::nn
