#pragma once

#include "style_erd/nn/autograd.hpp"
#include "style_erd/skeleton.hpp"

namespace style_erd::model {

// [M, 4J] -> per-joint unit quaternions on the w >= 0 hemisphere.
nn::Var normalize_quaternions(const nn::Var& q);

// Root-relative joint positions [M, 3J] from unit local rotations [M, 4J]
// (root translation zero). First-order differentiable only.
nn::Var fk_positions(const nn::Var& q, const Skeleton& skeleton);

}  // namespace style_erd::model
