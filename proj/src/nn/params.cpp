#include "style_erd/nn/params.hpp"

#include "style_erd/errors.hpp"

#include <cmath>
#include <cstring>

namespace style_erd::nn {

Var ParamStore::add(const std::string& name, Tensor init) {
  if (index_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
  index_.emplace(name, vars_.size());
  names_.push_back(name);
  vars_.emplace_back(std::move(init), trainable_);
  return vars_.back();
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return vars_[it->second];
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Var& v : vars_) n += v.size();
  return n;
}

void ParamStore::set_trainable(bool trainable) {
  trainable_ = trainable;
  for (Var& v : vars_) v.node()->requires_grad = trainable;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.names_ != names_) throw ShapeError("parameter stores have different layouts");
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    require_same_shape(vars_[i].value(), other.vars_[i].value(), names_[i].c_str());
    vars_[i].mutable_value() = other.vars_[i].value();
  }
}

std::uint64_t ParamStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    mix(names_[i].data(), names_[i].size());
    const auto& shape = vars_[i].shape();
    mix(shape.data(), shape.size() * sizeof(int));
    auto data = vars_[i].value().data();
    mix(data.data(), data.size_bytes());
  }
  return h;
}

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor fan_in_tensor(Shape shape, int fan_in, std::mt19937_64& rng) {
  return uniform_tensor(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

}  // namespace style_erd::nn
