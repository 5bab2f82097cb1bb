#pragma once

#include "style_erd/nn/autograd.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace style_erd::nn {

// Named trainable tensors in insertion order. Iteration order is part of the
// checkpoint contract.
class ParamStore {
 public:
  // Returns the handle by value; references into the store move on growth.
  Var add(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const noexcept { return vars_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<Var>& vars() const noexcept { return vars_; }
  std::size_t scalar_count() const;

  // Frozen stores are read as constants: no graph is recorded through them.
  void set_trainable(bool trainable);
  bool trainable() const noexcept { return trainable_; }

  // Overwrites values from another store with identical names and shapes.
  void copy_values_from(const ParamStore& other);
  // FNV-1a over names, shapes and raw values.
  std::uint64_t checksum() const;

 private:
  std::vector<std::string> names_;
  std::vector<Var> vars_;
  std::unordered_map<std::string, std::size_t> index_;
  bool trainable_ = true;
};

// Uniform in [-bound, bound].
Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng);
// Uniform fan-in rule: bound = 1/sqrt(fan_in).
Tensor fan_in_tensor(Shape shape, int fan_in, std::mt19937_64& rng);

}  // namespace style_erd::nn
