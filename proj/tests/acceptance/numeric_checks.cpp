#include "criteria.hpp"
#include "gradcheck.hpp"
#include "model_fixtures.hpp"

#include "style_erd/eval/fmd.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/model/classifier.hpp"
#include "style_erd/model/discriminator.hpp"
#include "style_erd/model/kinematics.hpp"
#include "style_erd/nn/layers.hpp"
#include "style_erd/nn/ops.hpp"
#include "style_erd/train/losses.hpp"
#include "style_erd/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>

namespace acceptance {

using namespace style_erd;
using nn::Tensor;
using nn::Var;

namespace {

constexpr double kRtol = 1e-3;

Var probe_sum(const Var& y, std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  return nn::sum(nn::mul_const(y, testing::random_tensor(y.shape(), rng)));
}

struct Tally {
  int checked = 0;
  std::vector<std::string> failures;
  double worst = 0.0;

  void add(const std::string& name, const testing::GradCheckResult& r) {
    ++checked;
    worst = std::max(worst, r.worst_abs);
    if (!r.ok) failures.push_back(name + " (" + r.detail + ")");
  }
};

void primitive(Tally& t, const std::string& name, const testing::ScalarFn& f,
               const std::vector<Tensor>& inputs) {
  t.add(name, testing::check_gradients(f, inputs, 1e-5, kRtol, 1e-7));
}

Var row(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return nn::constant(Tensor({1, n}, std::move(v)));
}

Var column(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return nn::constant(Tensor({n, 1}, std::move(v)));
}

// Random unit quaternion rows [m, 4j], away from the arccos kink at |<r, r2>| = 1.
Tensor unit_rows(int m, int j, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t({m, 4 * j});
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k < j; ++k) {
      Quaternion q{n(rng), n(rng), n(rng), n(rng)};
      q = q.normalized();
      t.at(r, 4 * k) = q.w;
      t.at(r, 4 * k + 1) = q.x;
      t.at(r, 4 * k + 2) = q.y;
      t.at(r, 4 * k + 3) = q.z;
    }
  }
  return t;
}

}  // namespace

Outcome gradient_integrity(Context&) {
  using namespace nn;
  const auto t0 = std::chrono::steady_clock::now();
  Tally t;
  std::mt19937_64 rng(101);

  // Primitives.
  Tensor a = testing::random_tensor({3, 4}, rng);
  for (double& v : a.storage()) v = v >= 0 ? v + 0.05 : v - 0.05;
  const Tensor b = testing::random_tensor({3, 4}, rng);
  const Tensor m42 = testing::random_tensor({4, 2}, rng);
  const Tensor bias4 = testing::random_tensor({4}, rng);
  primitive(t, "add", [](auto& v) { return probe_sum(add(v[0], v[1])); }, {a, b});
  primitive(t, "sub", [](auto& v) { return probe_sum(sub(v[0], v[1])); }, {a, b});
  primitive(t, "mul", [](auto& v) { return probe_sum(mul(v[0], v[1])); }, {a, b});
  primitive(t, "scale", [](auto& v) { return probe_sum(neg(scale(v[0], 1.3))); }, {a});
  primitive(t, "relu", [](auto& v) { return probe_sum(relu(v[0])); }, {a});
  primitive(t, "leaky_relu", [](auto& v) { return probe_sum(leaky_relu(v[0])); }, {a});
  primitive(t, "tanh", [](auto& v) { return probe_sum(nn::tanh(v[0])); }, {a});
  primitive(t, "sigmoid", [](auto& v) { return probe_sum(sigmoid(v[0])); }, {a});
  primitive(t, "abs", [](auto& v) { return probe_sum(nn::abs(v[0])); }, {a});
  primitive(t, "pow", [](auto& v) { return probe_sum(pow_scalar(add_scalar(mul(v[0], v[0]), 1.0), -0.5)); }, {a});
  primitive(t, "acos", [](auto& v) { return probe_sum(acos_clamped(scale(v[0], 0.8))); },
            {testing::random_tensor({3, 4}, rng)});
  primitive(t, "matmul", [](auto& v) { return probe_sum(matmul(v[0], v[1])); }, {a, m42});
  primitive(t, "matmul_t", [](auto& v) { return probe_sum(matmul(v[0], v[1], true, true)); },
            {testing::random_tensor({4, 3}, rng), testing::random_tensor({2, 4}, rng)});
  primitive(t, "add_bias", [](auto& v) { return probe_sum(add_bias(v[0], v[1])); }, {a, bias4});
  primitive(t, "concat_slice", [](auto& v) {
    return probe_sum(slice_cols(concat_rows({v[0], slice_rows(v[1], 1, 2)}), 1, 2));
  }, {a, b});
  primitive(t, "gather_scatter", [](auto& v) {
    return probe_sum(scatter_rows(gather_rows(v[0], {2, 0}), {3, 1}, 4));
  }, {a});
  primitive(t, "group", [](auto& v) { return probe_sum(group_expand(group_sum(v[0], 2), 2)); }, {a});
  primitive(t, "cross_entropy", [](auto& v) { return cross_entropy(v[0], {1, 3, 0}); }, {a});

  const Tensor x3 = testing::random_tensor({2, 3, 8}, rng);
  const Tensor w3 = testing::random_tensor({4, 3, 4}, rng);
  primitive(t, "conv1d", [](auto& v) { return probe_sum(conv1d(v[0], v[1], {2, 1})); }, {x3, w3});
  primitive(t, "conv1d_transposed", [](auto& v) {
    return probe_sum(conv1d_input_grad(v[0], v[1], 8, {2, 1}));
  }, {testing::random_tensor({2, 4, 4}, rng), w3});
  primitive(t, "channel_bias", [](auto& v) { return probe_sum(add_channel_bias(v[0], v[1])); },
            {testing::random_tensor({2, 4, 5}, rng), bias4});
  primitive(t, "permute3", [](auto& v) { return probe_sum(permute3(v[0], {2, 0, 1})); }, {x3});
  primitive(t, "instance_norm", [](auto& v) { return probe_sum(instance_norm(v[0])); }, {x3});
  primitive(t, "dense", [](auto& v) { return probe_sum(dense(v[0], v[1], v[2], Activation::tanh)); },
            {testing::random_tensor({3, 2}, rng), testing::random_tensor({2, 5}, rng),
             testing::random_tensor({5}, rng)});
  {
    const int h = 4;
    primitive(t, "lstm_step", [&](auto& v) {
      LstmState s{v[2], v[3]};
      auto [out, next] = lstm_step(v[4], s, {v[0], v[1]});
      return add(probe_sum(out, 3), probe_sum(next.c, 4));
    }, {testing::random_tensor({2 + h, 4 * h}, rng), testing::random_tensor({4 * h}, rng),
        testing::random_tensor({3, h}, rng), testing::random_tensor({3, h}, rng),
        testing::random_tensor({3, 2}, rng)});
  }
  {
    const auto cfg = testing::tiny_config();
    primitive(t, "quaternion_fk", [&](auto& v) {
      return probe_sum(model::fk_positions(model::normalize_quaternions(v[0]), cfg.skeleton));
    }, {testing::random_tensor({3, 8}, rng)});
    primitive(t, "attention", [](auto& v) {
      return probe_sum(model::weighted_sum(v[0], model::attention_matrix({v[1], v[2]})));
    }, {testing::random_tensor({2, 3, 4}, rng), testing::random_tensor({2, 3}, rng),
        testing::random_tensor({2, 4}, rng)});
  }

  // Loss terms as functions of their inputs.
  const Tensor q1 = unit_rows(3, 2, rng);
  const Tensor q2 = unit_rows(3, 2, rng);
  primitive(t, "L_quat", [](auto& v) { return train::loss_quat(v[0], v[1]); }, {q1, q2});
  primitive(t, "L_rec", [](auto& v) { return train::loss_rec(v[0], v[1], v[2], v[3], v[4], v[5]); },
            {q1, testing::random_tensor({3, 6}, rng), testing::random_tensor({3, 6}, rng), q2,
             testing::random_tensor({3, 6}, rng), testing::random_tensor({3, 6}, rng)});
  primitive(t, "L_adv", [](auto& v) { return train::loss_adv(v[0]); }, {testing::random_tensor({4, 1}, rng)});
  primitive(t, "L_cri", [](auto& v) { return train::loss_cri(v[0], v[1]); },
            {testing::random_tensor({4, 1}, rng), testing::random_tensor({3, 1}, rng)});
  primitive(t, "L_per", [](auto& v) { return train::loss_per(v[0], v[1]); },
            {testing::random_tensor({3, 5}, rng), testing::random_tensor({3, 5}, rng)});

  // Every loss term with respect to every parameter of the miniature model
  // (J = 2, H = 4, T = 8, C' = 8).
  const model::ModelConfig cfg = testing::tiny_config();
  model::Generator gen(cfg, 11);
  model::Discriminator dis(cfg, 12);
  model::ContentClassifier cls(cfg, 13);
  cls.params().set_trainable(false);
  const auto windows = testing::labeled_windows(cfg, 3, 40);
  const train::Networks nets{gen, dis, &cls};
  std::vector<train::TrainingTask> rec;
  std::vector<train::TrainingTask> xfer;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    rec.push_back({&w, w.style.index, train::TaskKind::reconstruction});
    const int target = w.style.index == kNeutralStyle ? 1 + static_cast<int>(i) % 2 : kNeutralStyle;
    xfer.push_back({&w, target, train::TaskKind::transfer});
  }
  auto all = rec;
  all.insert(all.end(), xfer.begin(), xfer.end());
  train::LossBundle scratch;
  auto param_check = [&](const std::string& name, const std::function<Var()>& loss,
                         nn::ParamStore& store, bool graph_free = true) {
    t.add(name, testing::check_param_gradients(loss, store, 1e-5, kRtol, 1e-6, graph_free));
  };
  param_check("gen:L_rec", [&] { return train::generator_loss(nets, rec, {}, {false, false}, scratch); },
              gen.params());
  param_check("gen:L_adv", [&] { return train::generator_loss(nets, xfer, {}, {true, false}, scratch); },
              gen.params());
  param_check("gen:L_per", [&] { return train::generator_loss(nets, xfer, {}, {false, true}, scratch); },
              gen.params());
  train::LossWeights cri_only;
  cri_only.gp = 0.0;
  param_check("dis:L_cri", [&] { return train::discriminator_loss(nets, all, cri_only, scratch); },
              dis.params());
  param_check("dis:L_gp", [&] {
    const Var real(train::window_style_input({&windows[0], &windows[1], &windows[2]}), true);
    return train::loss_gp_from_scores(dis.discriminate(real, {0, 1, 2}, {0, 0, 1}), real);
  }, dis.params(), false);
  {
    model::ContentClassifier fresh(cfg, 14);
    const Tensor x = train::window_content_input({&windows[0], &windows[1], &windows[2]});
    param_check("classifier:CE", [&] { return nn::cross_entropy(fresh.logits(nn::constant(x)), {0, 1, 0}); },
                fresh.params());
  }

  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.pass = t.failures.empty() && s < 60.0;
  o.detail = std::to_string(t.checked) + " checks, " + std::to_string(t.failures.size()) +
             " failed, " + std::to_string(static_cast<int>(s)) + " s of 60";
  if (!t.failures.empty()) o.detail += "; first: " + t.failures.front();
  o.metrics = {{"checks", t.checked}, {"failures", t.failures}, {"seconds", s}, {"worst_abs", t.worst}};
  return o;
}

Outcome loss_oracles(Context&) {
  const double h = std::sqrt(0.5);
  struct Case {
    const char* name;
    double got;
    double want;
  };
  std::vector<Case> cases;
  cases.push_back({"L_quat pi/4", train::loss_quat(row({1, 0, 0, 0}), row({h, h, 0, 0})).value().item(),
                   std::numbers::pi / 4.0});
  cases.push_back({"L_cri (0,0)", train::loss_cri(column({0}), column({0})).value().item(), 2.0});
  {
    const Tensor w({3, 1}, std::vector<double>{1.0, -2.0, 0.5});
    const train::Critic linear = [&](const Var& x) { return nn::add_scalar(nn::matmul(x, nn::constant(w)), 0.3); };
    std::mt19937_64 rng(8);
    cases.push_back({"L_gp linear", train::loss_gp(linear, testing::random_tensor({5, 3}, rng, -4, 4)).value().item(),
                     5.25});
  }
  {
    const Var ws = model::attention_matrix(
        {nn::constant(Tensor({1, 2}, std::vector<double>{1, 2})), nn::constant(Tensor({1, 2}, std::vector<double>{3, 4}))});
    const double want[4] = {3, 4, 6, 8};
    for (int k = 0; k < 4; ++k) cases.push_back({"outer product", ws.value()[k], want[k]});
  }
  {
    const Var ones_m = nn::constant(Tensor({1, 160, 3}, 1.0));
    const Var ones_w = nn::constant(Tensor({1, 160, 3}, 1.0));
    cases.push_back({"all-ones D", model::weighted_sum(ones_m, ones_w).value().item(), 480.0});
  }
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (const auto& c : cases) {
    const double err = std::fabs(c.got - c.want);
    worst = std::max(worst, err);
    o.metrics[c.name] = c.got;
    if (!(err <= 1e-9)) {
      o.pass = false;
      o.detail += std::string(c.name) + " gave " + std::to_string(c.got) + "; ";
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu oracles, worst error %.2e (tolerance 1e-9)", cases.size(), worst);
  o.detail += buf;
  return o;
}

Outcome frechet_oracle(Context&) {
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  // Equal covariances: the trace term vanishes.
  for (int d : {1, 3, 8}) {
    Eigen::MatrixXd l = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n(rng); });
    const Eigen::MatrixXd cov = l * l.transpose() + Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd ma = Eigen::VectorXd::NullaryExpr(d, [&] { return n(rng); });
    const Eigen::VectorXd mb = Eigen::VectorXd::NullaryExpr(d, [&] { return n(rng); });
    const double got = eval::frechet_distance({ma, cov}, {mb, cov});
    const double want = (ma - mb).squaredNorm();
    worst = std::max(worst, std::fabs(got - want));
  }
  // Commuting 4I and I in two dimensions: tr(4I + I - 2 * 2I) = 2.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  const double commuting = eval::frechet_distance({zero, 4.0 * Eigen::MatrixXd::Identity(2, 2)},
                                                  {zero, Eigen::MatrixXd::Identity(2, 2)});
  worst = std::max(worst, std::fabs(commuting - 2.0));
  if (!(worst <= 1e-8)) o.pass = false;

  // FMD(X, X) through an extractor over synthetic windows.
  io::SynthDatasetConfig dc;
  dc.clips_per_pair = 2;
  const auto windows = io::window_clips(io::make_synthetic_dataset(dc)).windows;
  const eval::FmdExtractor ext(io::kSynthJointCount, io::kDefaultWindow, 3);
  const nn::Tensor x = eval::rotation_input(windows);
  const double self = eval::compute_fmd(x, x, ext).fmd;
  if (!(std::fabs(self) <= 1e-6)) o.pass = false;

  char buf[160];
  std::snprintf(buf, sizeof(buf), "closed forms worst error %.2e (tol 1e-8), FMD(X,X) = %.2e (tol 1e-6)",
                worst, self);
  o.detail = buf;
  o.metrics = {{"closed_form_worst", worst}, {"commuting", commuting}, {"fmd_self", self}};
  return o;
}

}  // namespace acceptance
