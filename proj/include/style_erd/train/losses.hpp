#pragma once

#include "style_erd/nn/autograd.hpp"

#include <functional>

namespace style_erd::train {

// Mean over rows and joints of arccos(|<r, r2>|) for [M, 4J] unit quaternions.
nn::Var loss_quat(const nn::Var& r, const nn::Var& r2);

// Sum over rows (frames) of L_quat + 1/2 |p - p2|^2 + |v - v2|^2, each row's
// rotation term being its mean joint angle. One row is a single-frame L_rec.
nn::Var loss_rec(const nn::Var& r, const nn::Var& p, const nn::Var& v, const nn::Var& r2,
                 const nn::Var& p2, const nn::Var& v2);

// Batch means of the least-squares terms over critic outputs [N, 1].
nn::Var loss_adv(const nn::Var& fake_scores);
nn::Var loss_cri(const nn::Var& real_scores, const nn::Var& fake_scores);

// Mean squared input-gradient norm of a critic at real samples [N, ...]; the
// critic maps a batch to [N, 1] with rows independent. The result is
// differentiable with respect to the critic's parameters.
using Critic = std::function<nn::Var(const nn::Var&)>;
nn::Var loss_gp(const Critic& critic, const nn::Tensor& real);
// Same, reusing already computed scores of a leaf input `real`.
nn::Var loss_gp_from_scores(const nn::Var& scores, const nn::Var& real);

// Mean over the batch of |phi - phi2|^2 summed over features.
nn::Var loss_per(const nn::Var& phi, const nn::Var& phi2);

}  // namespace style_erd::train
