#include "gradcheck.hpp"
#include "model_fixtures.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/model/classifier.hpp"
#include "style_erd/model/discriminator.hpp"
#include "style_erd/model/generator.hpp"
#include "style_erd/model/kinematics.hpp"
#include "style_erd/model/session.hpp"
#include "style_erd/nn/ops.hpp"

#include "doctest.h"

#include <cmath>

using namespace style_erd;
using namespace style_erd::model;
using nn::Tensor;
using nn::Var;

namespace {

Tensor quaternion_rows(const std::vector<MotionFrame>& frames) {
  const int j = frames[0].joint_count();
  Tensor t({static_cast<int>(frames.size()), 4 * j});
  for (std::size_t r = 0; r < frames.size(); ++r) {
    for (int k = 0; k < j; ++k) {
      const Quaternion& q = frames[r].rotations[k];
      t.at(static_cast<int>(r), 4 * k) = q.w;
      t.at(static_cast<int>(r), 4 * k + 1) = q.x;
      t.at(static_cast<int>(r), 4 * k + 2) = q.y;
      t.at(static_cast<int>(r), 4 * k + 3) = q.z;
    }
  }
  return t;
}

std::vector<MotionFrame> run_online(const Generator& gen, const std::vector<MotionFrame>& in,
                                    int source, int content, const TargetSpec& target) {
  StreamSession s(gen, StyleLabel(source, gen.config().styles),
                  ContentLabel(content, gen.config().contents), target);
  std::vector<MotionFrame> out;
  for (const MotionFrame& f : in) out.push_back(s.transfer_frame(f));
  return out;
}

double max_abs(const Tensor& a, const Tensor& b) {
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::fabs(a[i] - b[i]));
  return w;
}

void zero_branch(Generator& gen, int branch) {
  const std::string prefix = "branch." + std::to_string(branch) + ".";
  for (std::size_t i = 0; i < gen.params().size(); ++i) {
    if (gen.params().names()[i].rfind(prefix, 0) == 0) {
      Var v = gen.params().vars()[i];
      for (double& x : v.mutable_value().storage()) x = 0.0;
    }
  }
}

}  // namespace

TEST_CASE("fk op agrees with quaternion forward kinematics") {
  const Skeleton sk = io::synth_skeleton();
  const auto frames = testing::random_frames(sk, 5, 21);
  const Var pos = fk_positions(nn::constant(quaternion_rows(frames)), sk);
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const JointMatrix expect = root_relative(
        forward_kinematics(sk, frames[r].rotations, Eigen::Vector3d(3.0, -1.0, 2.0)));
    for (int j = 0; j < sk.joint_count(); ++j) {
      for (int k = 0; k < 3; ++k) {
        CHECK(pos.value().at(static_cast<int>(r), 3 * j + k) == doctest::Approx(expect(j, k)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("fk op gradient matches finite differences") {
  const Skeleton sk = io::synth_skeleton();
  std::mt19937_64 rng(4);
  const Tensor raw = testing::random_tensor({2, 4 * sk.joint_count()}, rng);
  const Tensor weights = testing::random_tensor({2, 3 * sk.joint_count()}, rng);
  auto f = [&](const std::vector<Var>& xs) {
    return nn::sum(nn::mul_const(fk_positions(normalize_quaternions(xs[0]), sk), weights));
  };
  const auto r = testing::check_gradients(f, {raw}, 1e-5, 1e-5, 1e-7);
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("fk op refuses second-order graphs") {
  const Skeleton sk = io::synth_skeleton();
  Var q(quaternion_rows(testing::random_frames(sk, 1, 2)), true);
  const Var out = nn::sum(fk_positions(q, sk));
  const Var qs[] = {q};
  CHECK_THROWS_AS(nn::grad(out, std::span<const Var>(qs), true), ContractError);
}

TEST_CASE("normalize_quaternions yields unit quaternions with w >= 0") {
  Tensor raw({2, 8}, std::vector<double>{-2, 0, 0, 0, 1, 2, 3, 4, 0.5, -0.5, 0.5, -0.5, -1, -1, 1, 1});
  const Var q = normalize_quaternions(nn::constant(raw));
  CHECK(q.value().at(0, 0) == doctest::Approx(1.0));
  CHECK(q.value().at(0, 4) == doctest::Approx(1.0 / std::sqrt(30.0)));
  CHECK(q.value().at(0, 7) == doctest::Approx(4.0 / std::sqrt(30.0)));
  CHECK(q.value().at(1, 4) == doctest::Approx(0.5));
  CHECK(q.value().at(1, 5) == doctest::Approx(0.5));
  CHECK(q.value().at(1, 6) == doctest::Approx(-0.5));
  for (int r = 0; r < 2; ++r) {
    for (int j = 0; j < 2; ++j) {
      double n = 0.0;
      for (int k = 0; k < 4; ++k) n += q.value().at(r, 4 * j + k) * q.value().at(r, 4 * j + k);
      CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(q.value().at(r, 4 * j) >= 0.0);
    }
  }
}

TEST_CASE("generator shapes and parameter layout") {
  const Generator gen(testing::synth_config(), 1);
  CHECK(gen.branch_count() == 3);
  CHECK(gen.params().get("branch.0.layer.5.W").shape() == nn::Shape{64, 128});
  CHECK_FALSE(gen.params().contains("branch.0.layer.6.W"));
  CHECK(gen.params().get("branch.2.layer.3.W").shape() == nn::Shape{64, 128});
  CHECK_FALSE(gen.params().contains("branch.1.layer.4.W"));
  CHECK(gen.params().get("h0.0.h").shape() == nn::Shape{2, 6 * 32});
  CHECK(gen.params().get("h0.1.c").shape() == nn::Shape{1, 4 * 32});
  CHECK(gen.params().get("dec.out.W").shape() == nn::Shape{184, 7 * 13});

  auto cfg = testing::synth_config();
  cfg.zero_init_states = true;
  const Generator zero(cfg, 1);
  CHECK_FALSE(zero.params().contains("h0.0.h"));
}

TEST_CASE("encoder output width, determinism and label conditioning") {
  const auto frames = testing::random_frames(io::synth_skeleton(), 3, 5);
  const Tensor feats = pack_features({&frames});
  const Generator a(testing::synth_config(), 7);
  const Generator b(testing::synth_config(), 7);
  const Generator c(testing::synth_config(), 8);
  const Tensor s = one_hot_rows({0, 0, 0}, 3);
  const Tensor k = one_hot_rows({1, 1, 1}, 2);
  const Var za = a.encode(nn::constant(feats), s, k);
  CHECK(za.shape() == nn::Shape{3, 32});
  CHECK(max_abs(za.value(), b.encode(nn::constant(feats), s, k).value()) == 0.0);
  CHECK(max_abs(za.value(), c.encode(nn::constant(feats), s, k).value()) > 1e-6);
  CHECK(max_abs(za.value(), a.encode(nn::constant(feats), one_hot_rows({2, 2, 2}, 3), k).value()) > 1e-6);
  Tensor wrong({3, 20});
  CHECK_THROWS_AS(a.encode(nn::constant(wrong), s, k), ShapeError);
  CHECK_THROWS_AS(one_hot_rows({3}, 3), RangeError);
}

TEST_CASE("decoder emits unit rotations and root-relative FK positions") {
  const Generator gen(testing::synth_config(), 2);
  std::mt19937_64 rng(1);
  const DecodedMotion m = gen.decode(nn::constant(testing::random_tensor({4, 32}, rng)),
                                     one_hot_rows({0, 1, 2, 1}, 3));
  const Skeleton sk = io::synth_skeleton();
  for (int r = 0; r < 4; ++r) {
    std::vector<Quaternion> qs;
    for (int j = 0; j < 13; ++j) {
      Quaternion q{m.rotations.value().at(r, 4 * j), m.rotations.value().at(r, 4 * j + 1),
                   m.rotations.value().at(r, 4 * j + 2), m.rotations.value().at(r, 4 * j + 3)};
      CHECK(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z == doctest::Approx(1.0));
      CHECK(q.w >= 0.0);
      qs.push_back(q);
    }
    const JointMatrix p = root_relative(forward_kinematics(sk, qs, Eigen::Vector3d::Zero()));
    for (int k = 0; k < 3; ++k) CHECK(m.positions.value().at(r, k) == 0.0);
    for (int j = 0; j < 13; ++j) {
      for (int k = 0; k < 3; ++k) {
        CHECK(m.positions.value().at(r, 3 * j + k) == doctest::Approx(p(j, k)).epsilon(1e-12));
      }
    }
  }
  CHECK(m.velocities.shape() == nn::Shape{4, 39});
}

TEST_CASE("initial states depend on content only through r0") {
  const Generator gen(testing::synth_config(), 3);
  StreamSession a(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1});
  StreamSession b(gen, StyleLabel(2, 3), ContentLabel(0, 2), {2});
  StreamSession c(gen, StyleLabel(0, 3), ContentLabel(1, 2), {1});
  for (std::size_t l = 0; l < a.neutral_state().size(); ++l) {
    CHECK(max_abs(a.neutral_state()[l].h.value(), b.neutral_state()[l].h.value()) == 0.0);
    CHECK(max_abs(a.neutral_state()[l].c.value(), b.neutral_state()[l].c.value()) == 0.0);
  }
  CHECK(max_abs(a.neutral_state()[0].h.value(), c.neutral_state()[0].h.value()) > 1e-6);
  REQUIRE(a.style_state(1) != nullptr);
  CHECK(max_abs(a.style_state(1)->front().h.value(), c.style_state(1)->front().h.value()) == 0.0);
  CHECK(a.style_state(2) == nullptr);
  CHECK(b.style_state(1) == nullptr);

  const auto frames = testing::random_frames(io::synth_skeleton(), 2, 9);
  MotionFrame fa = a.transfer_frame(frames[0]);
  MotionFrame fc = c.transfer_frame(frames[0]);
  CHECK(testing::frame_difference(fa, fc) > 1e-6);
  CHECK(a.frame_index() == 1);
}

TEST_CASE("neutral target uses r0 alone") {
  const Generator gen(testing::synth_config(), 4);
  StreamSession s(gen, StyleLabel(1, 3), ContentLabel(0, 2), {kNeutralStyle});
  CHECK(s.style_state(1) == nullptr);
  std::mt19937_64 rng(2);
  const Var z = nn::constant(testing::random_tensor({1, 32}, rng));
  const Var zp = s.recurrent_step(z);
  CHECK(max_abs(zp.value(), s.last_neutral_output().value()) == 0.0);
}

TEST_CASE("target blending limits") {
  const Generator gen(testing::synth_config(), 5);
  const auto frames = testing::random_frames(io::synth_skeleton(), 6, 10);
  const auto neutral = run_online(gen, frames, 0, 1, {kNeutralStyle});
  const auto zero_alpha = run_online(gen, frames, 0, 1, {2, std::nullopt, 0.0});
  CHECK(testing::sequence_difference(neutral, zero_alpha) < 1e-12);

  const auto plain = run_online(gen, frames, 0, 1, {2});
  const auto two_full = run_online(gen, frames, 0, 1, {2, 1, 1.0});
  CHECK(testing::sequence_difference(plain, two_full) < 1e-12);
  const auto two_zero = run_online(gen, frames, 0, 1, {2, 1, 0.0});
  CHECK(testing::sequence_difference(run_online(gen, frames, 0, 1, {1}), two_zero) < 1e-12);
  CHECK(testing::sequence_difference(plain, neutral) > 1e-6);

  CHECK_THROWS_AS(StreamSession(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1, std::nullopt, 1.5}),
                  RangeError);
  CHECK_THROWS_AS(StreamSession(gen, StyleLabel(0, 3), ContentLabel(0, 2), {3}), RangeError);
}

TEST_CASE("label row and residual weights") {
  const Tensor r = target_label_row({2, 1, 0.25}, 3);
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 1) == doctest::Approx(0.75));
  CHECK(r.at(0, 2) == doctest::Approx(0.25));
  const Tensor single = target_label_row({1, std::nullopt, 0.4}, 3);
  CHECK(single.at(0, 0) == doctest::Approx(0.6));
  CHECK(single.at(0, 1) == doctest::Approx(0.4));
  CHECK(residual_weights({kNeutralStyle}).empty());
  const auto w = residual_weights({1, 1, 0.3});
  REQUIRE(w.size() == 1);
  CHECK(w[0].second == doctest::Approx(1.0));
}

TEST_CASE("output is continuous in alpha") {
  const Generator gen(testing::synth_config(), 6);
  const auto frames = testing::random_frames(io::synth_skeleton(), 4, 11);
  double previous = 1e9;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const double d = testing::sequence_difference(run_online(gen, frames, 0, 0, {1, 2, 0.5}),
                                                  run_online(gen, frames, 0, 0, {1, 2, 0.5 + delta}));
    CHECK(d < 50.0 * delta);
    CHECK(d < previous);
    previous = d;
  }
}

TEST_CASE("set_target keeps engaged state and changes the next frame") {
  const Generator gen(testing::synth_config(), 7);
  const auto frames = testing::random_frames(io::synth_skeleton(), 4, 12);
  StreamSession a(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1});
  StreamSession b(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1});
  a.transfer_frame(frames[0]);
  b.transfer_frame(frames[0]);
  const Tensor before = a.style_state(1)->front().h.value();
  a.set_target({1});
  CHECK(max_abs(before, a.style_state(1)->front().h.value()) == 0.0);
  CHECK(testing::frame_difference(a.transfer_frame(frames[1]), b.transfer_frame(frames[1])) == 0.0);

  a.set_target({1, std::nullopt, 0.5});
  CHECK(a.style_state(1) != nullptr);
  CHECK(testing::frame_difference(a.transfer_frame(frames[2]), b.transfer_frame(frames[2])) > 1e-6);

  a.set_target({2});
  CHECK(a.style_state(1) == nullptr);
  REQUIRE(a.style_state(2) != nullptr);
  StreamSession fresh(gen, StyleLabel(0, 3), ContentLabel(0, 2), {2});
  CHECK(max_abs(a.style_state(2)->front().c.value(), fresh.style_state(2)->front().c.value()) == 0.0);
  CHECK_THROWS_AS(a.set_target({1, std::nullopt, -0.1}), RangeError);
  CHECK(a.target() == TargetSpec{2});
}

TEST_CASE("zeroed residual branch reduces to the neutral path") {
  auto cfg = testing::synth_config();
  cfg.zero_init_states = true;
  Generator gen(cfg, 8);
  zero_branch(gen, 1);
  const auto frames = testing::random_frames(io::synth_skeleton(), 5, 13);
  StreamSession styled(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1});
  StreamSession neutral(gen, StyleLabel(0, 3), ContentLabel(0, 2), {kNeutralStyle});
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Var z = nn::constant(testing::random_tensor({1, 32}, rng));
    CHECK(max_abs(styled.recurrent_step(z).value(), neutral.recurrent_step(z).value()) == 0.0);
  }
}

TEST_CASE("streaming equals offline over 100 frames") {
  const Generator gen(testing::synth_config(), 9);
  const io::MotionClip clip = io::synth_gait(ContentLabel(0, 2), io::synth_style_preset(0), 100, 60.0, 4);
  for (const TargetSpec& target : {TargetSpec{1}, TargetSpec{kNeutralStyle}, TargetSpec{2, 1, 0.3}}) {
    const auto online = run_online(gen, clip.frames, 0, 0, target);
    const auto offline = transfer_offline(gen, clip.frames, StyleLabel(0, 3), ContentLabel(0, 2), target);
    REQUIRE(online.size() == 100);
    CHECK(testing::sequence_difference(online, offline) <= 1e-5);
    CHECK(online[57].root_translation == clip.frames[57].root_translation);
  }
}

TEST_CASE("batched training forward equals streaming") {
  const Generator gen(testing::synth_config(), 10);
  const auto a = testing::random_frames(io::synth_skeleton(), 6, 14);
  const auto b = testing::random_frames(io::synth_skeleton(), 6, 15);
  SequenceBatch batch;
  batch.features = pack_features({&a, &b});
  batch.source_styles = {0, 2};
  batch.contents = {1, 0};
  batch.target_styles = {1, 0};
  batch.sequences = 2;
  batch.steps = 6;
  const SequenceOutput out = run_sequences(gen, batch);
  std::vector<Eigen::Vector3d> roots(12, Eigen::Vector3d::Zero());
  const auto rows = frames_from_decoded(out.motion, roots);
  auto oa = run_online(gen, a, 0, 1, {1});
  auto ob = run_online(gen, b, 2, 0, {kNeutralStyle});
  for (int t = 0; t < 6; ++t) {
    oa[t].root_translation.setZero();
    ob[t].root_translation.setZero();
    CHECK(testing::frame_difference(rows[2 * t], oa[t]) < 1e-10);
    CHECK(testing::frame_difference(rows[2 * t + 1], ob[t]) < 1e-10);
  }
}

TEST_CASE("session lifecycle and shape errors") {
  StreamSession s;
  CHECK_FALSE(s.is_open());
  const auto frames = testing::random_frames(io::synth_skeleton(), 1, 1);
  CHECK_THROWS_AS(s.transfer_frame(frames[0]), LifecycleError);
  CHECK_THROWS_AS(s.set_target({1}), LifecycleError);
  const Generator gen(testing::synth_config(), 1);
  StreamSession open(gen, StyleLabel(0, 3), ContentLabel(0, 2), {1});
  const auto small = testing::random_frames(testing::tiny_config().skeleton, 1, 1);
  CHECK_THROWS_AS(open.transfer_frame(small[0]), ShapeError);
}

TEST_CASE("discriminator shapes and attention") {
  const ModelConfig cfg = testing::synth_config();
  const Discriminator d(cfg, 3);
  CHECK(cfg.temporal_features() == 3);
  std::mt19937_64 rng(5);
  const Var x = nn::constant(testing::random_tensor({2, 78, 24}, rng));
  CHECK(d.style_features(x).shape() == nn::Shape{2, 160, 3});
  const Attention a = d.attention({0, 2}, {1, 0});
  CHECK(a.feature.shape() == nn::Shape{2, 160});
  CHECK(a.temporal.shape() == nn::Shape{2, 3});
  for (double v : a.feature.value().storage()) CHECK((v > 0.0 && v < 1.0));
  CHECK(d.discriminate(x, {0, 2}, {1, 0}).shape() == nn::Shape{2, 1});
  CHECK_THROWS_AS(d.discriminate(x, {0}, {1}), ShapeError);
}

TEST_CASE("attention matrix is the outer product and D sums the weighted features") {
  Tensor wf({1, 2}, std::vector<double>{0.5, 2.0});
  Tensor wt({1, 3}, std::vector<double>{1.0, -1.0, 3.0});
  const Var w = attention_matrix({nn::constant(wf), nn::constant(wt)});
  CHECK(w.shape() == nn::Shape{1, 2, 3});
  CHECK(w.value()[0] == 0.5);
  CHECK(w.value()[2] == 1.5);
  CHECK(w.value()[4] == -2.0);
  Tensor m({1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  // 0.5 + -1 + 4.5 + 8 + -10 + 36
  CHECK(weighted_sum(nn::constant(m), w).value()[0] == doctest::Approx(38.0));
}

TEST_CASE("discriminator without attention sums the raw features") {
  ModelConfig cfg = testing::tiny_config();
  cfg.attention = false;
  const Discriminator d(cfg, 2);
  CHECK_FALSE(d.params().contains("att.feature.0.W"));
  std::mt19937_64 rng(6);
  const Var x = nn::constant(testing::random_tensor({3, 12, 8}, rng));
  const Var dv = d.discriminate(x, {0, 1, 2}, {0, 1, 0});
  const Var m = d.style_features(x);
  for (int n = 0; n < 3; ++n) {
    double s = 0.0;
    for (int c = 0; c < m.dim(1); ++c) {
      for (int t = 0; t < m.dim(2); ++t) s += m.value().at(n, c, t);
    }
    CHECK(dv.value()[n] == doctest::Approx(s));
  }
}

TEST_CASE("discriminator input gradients, first and second order") {
  const Discriminator d(testing::tiny_config(), 4);
  std::mt19937_64 rng(7);
  const Tensor x = testing::random_tensor({2, 12, 8}, rng);
  auto f = [&](const std::vector<Var>& xs) { return nn::sum(d.discriminate(xs[0], {1, 2}, {0, 1})); };
  const auto r1 = testing::check_gradients(f, {x});
  CHECK_MESSAGE(r1.ok, r1.detail);
  auto gp = [&](const std::vector<Var>& xs) {
    const Var out = nn::sum(d.discriminate(xs[0], {1, 2}, {0, 1}));
    const auto g = nn::grad(out, std::span<const Var>(xs), true);
    return nn::sum(nn::mul(g[0], g[0]));
  };
  const auto r2 = testing::check_gradients(gp, {x}, 1e-5, 1e-4, 1e-6);
  CHECK_MESSAGE(r2.ok, r2.detail);
}

TEST_CASE("classifier features are normalized per channel") {
  const ModelConfig cfg = testing::synth_config();
  const ContentClassifier c(cfg, 5);
  std::mt19937_64 rng(8);
  const Var x = nn::constant(testing::random_tensor({2, 130, 24}, rng));
  const Var phi = c.content_features(x);
  CHECK(phi.shape() == nn::Shape{2, 160, 3});
  for (int n = 0; n < 2; ++n) {
    for (int ch = 0; ch < 160; ch += 17) {
      double mean = 0.0;
      for (int t = 0; t < 3; ++t) mean += phi.value().at(n, ch, t);
      CHECK(std::fabs(mean) < 1e-9);
    }
  }
  CHECK(c.logits(x).shape() == nn::Shape{2, 2});
  CHECK_THROWS_AS(c.logits(nn::constant(Tensor({1, 78, 24}))), ShapeError);
}

TEST_CASE("classifier gradient matches finite differences") {
  const ContentClassifier c(testing::tiny_config(), 6);
  std::mt19937_64 rng(9);
  const Tensor x = testing::random_tensor({2, 20, 8}, rng);
  auto f = [&](const std::vector<Var>& xs) { return nn::cross_entropy(c.logits(xs[0]), {0, 1}); };
  const auto r = testing::check_gradients(f, {x});
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("channel-first packing") {
  Tensor p({4, 3}, std::vector<double>{0, 1, 2, 10, 11, 12, 20, 21, 22, 30, 31, 32});
  Tensor v({4, 3}, std::vector<double>{-1, -1, -1, -2, -2, -2, -3, -3, -3, -4, -4, -4});
  const Var x = style_input(nn::constant(p), nn::constant(v), 2);
  CHECK(x.shape() == nn::Shape{2, 6, 2});
  // sequence 1 (rows 1 and 3), channel 2, step 1 -> row 3 col 2
  CHECK(x.value().at(1, 2, 1) == 32.0);
  CHECK(x.value().at(0, 4, 1) == -3.0);
  CHECK_THROWS_AS(style_input(nn::constant(p), nn::constant(v), 3), ShapeError);
}
