#include "style_erd/train/losses.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"

namespace style_erd::train {

using nn::Var;

namespace {

void require_same(const Var& a, const Var& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + nn::shape_string(a.shape()) + " and " +
                     nn::shape_string(b.shape()));
  }
}

Var squared_norm(const Var& x) { return nn::sum(nn::mul(x, x)); }

// [M, 4J] -> [M, J] per-joint angles.
Var joint_angles(const Var& r, const Var& r2) {
  return nn::acos_clamped(nn::abs(nn::group_sum(nn::mul(r, r2), 4)));
}

}  // namespace

Var loss_quat(const Var& r, const Var& r2) {
  require_same(r, r2, "loss_quat");
  return nn::mean(joint_angles(r, r2));
}

Var loss_rec(const Var& r, const Var& p, const Var& v, const Var& r2, const Var& p2,
             const Var& v2) {
  require_same(r, r2, "loss_rec rotations");
  require_same(p, p2, "loss_rec positions");
  require_same(v, v2, "loss_rec velocities");
  const Var angles = joint_angles(r, r2);
  const Var rot = nn::scale(nn::sum(angles), 1.0 / angles.dim(1));
  const Var pos = nn::scale(squared_norm(nn::sub(p, p2)), 0.5);
  return nn::add(nn::add(rot, pos), squared_norm(nn::sub(v, v2)));
}

Var loss_adv(const Var& fake_scores) { return nn::mean(nn::mul(fake_scores, fake_scores)); }

Var loss_cri(const Var& real_scores, const Var& fake_scores) {
  const Var r = nn::add_scalar(real_scores, -1.0);
  const Var f = nn::add_scalar(fake_scores, 1.0);
  return nn::add(nn::mean(nn::mul(r, r)), nn::mean(nn::mul(f, f)));
}

Var loss_gp_from_scores(const Var& scores, const Var& real) {
  const Var inputs[] = {real};
  const auto g = nn::grad(nn::sum(scores), std::span<const Var>(inputs), true);
  return nn::scale(squared_norm(g[0]), 1.0 / real.dim(0));
}

Var loss_gp(const Critic& critic, const nn::Tensor& real) {
  const Var x(real, true);
  return loss_gp_from_scores(critic(x), x);
}

Var loss_per(const Var& phi, const Var& phi2) {
  require_same(phi, phi2, "loss_per");
  return nn::scale(squared_norm(nn::sub(phi, phi2)), 1.0 / phi.dim(0));
}

}  // namespace style_erd::train
