#include "doctest.h"

#include "style_erd/errors.hpp"
#include "style_erd/motion.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace style_erd;

namespace {

Quaternion random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quaternion{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

Skeleton chain(int joints) {
  Skeleton s;
  for (int i = 0; i < joints; ++i) {
    s.parents.push_back(i - 1);
    s.offsets.push_back(i == 0 ? Eigen::Vector3d::Zero() : Eigen::Vector3d(0, 1, 0));
    s.names.push_back("j" + std::to_string(i));
  }
  return s;
}

}  // namespace

TEST_CASE("quat_angle worked examples") {
  const double h = std::sqrt(2.0) / 2.0;
  CHECK(quat_angle({1, 0, 0, 0}, {1, 0, 0, 0}) == 0.0);
  CHECK(quat_angle({1, 0, 0, 0}, {h, h, 0, 0}) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
  CHECK(quat_angle({1, 0, 0, 0}, {h, h, 0, 0}) == doctest::Approx(0.78540).epsilon(1e-5));
  CHECK(quat_angle({1, 0, 0, 0}, {-1, 0, 0, 0}) == 0.0);
}

TEST_CASE("quat_angle rejects non-unit input and names it") {
  try {
    quat_angle({1, 0, 0, 0}, {2, 0, 0, 0});
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("(2, 0, 0, 0)") != std::string::npos);
  }
}

TEST_CASE("quat_angle properties") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> small(0.001, 0.1);
  for (int k = 0; k < 200; ++k) {
    Quaternion a = random_unit(rng), b = random_unit(rng);
    const double d = quat_angle(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= std::numbers::pi / 2 + 1e-12);
    CHECK(d == doctest::Approx(quat_angle(b, a)).epsilon(1e-12));
    CHECK(d == doctest::Approx(quat_angle(-a, b)).epsilon(1e-12));
    CHECK(d == doctest::Approx(quat_angle(a, -b)).epsilon(1e-12));
    CHECK(quat_angle(a, a) < 1e-7);
    CHECK(quat_angle(a, -a) < 1e-7);
    // Small rotation delta: distance equals half the rotation angle.
    const double theta = small(rng);
    Eigen::Vector3d axis(std::normal_distribution<double>()(rng), 1.0, 0.5);
    Quaternion delta = Quaternion::from_axis_angle(axis.normalized(), theta);
    CHECK(std::fabs(quat_angle(a, (a * delta).normalized()) - theta / 2) < 1e-3);
  }
}

TEST_CASE("quaternion rotation and matrix round trip") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    Quaternion q = random_unit(rng);
    Eigen::Vector3d v(0.3, -1.2, 2.0);
    CHECK((q.rotate(v) - q.to_matrix() * v).norm() < 1e-12);
    Quaternion back = Quaternion::from_matrix(q.to_matrix());
    CHECK(quat_angle(q, back) < 1e-7);
    Quaternion p = random_unit(rng);
    CHECK(((p * q).rotate(v) - p.rotate(q.rotate(v))).norm() < 1e-12);
  }
}

TEST_CASE("forward kinematics worked examples") {
  Skeleton s = chain(2);
  std::vector<Quaternion> ident(2);
  JointMatrix p = forward_kinematics(s, ident, Eigen::Vector3d::Zero());
  CHECK(p.row(0).norm() == 0.0);
  CHECK((p.row(1) - Eigen::RowVector3d(0, 1, 0)).norm() < 1e-15);

  const Quaternion z90 = Quaternion::from_axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 2);
  std::vector<Quaternion> rot{z90, Quaternion::identity()};
  p = forward_kinematics(s, rot, Eigen::Vector3d::Zero());
  CHECK((p.row(1) - Eigen::RowVector3d(-1, 0, 0)).norm() < 1e-12);

  // Three-joint chain, two 90 degree z turns: composed by hand,
  // Rz(90) (0,1,0) = (-1,0,0); Rz(180) (0,1,0) = (0,-1,0).
  Skeleton s3 = chain(3);
  std::vector<Quaternion> rot3{z90, z90, Quaternion::identity()};
  p = forward_kinematics(s3, rot3, Eigen::Vector3d::Zero());
  Eigen::Matrix3d rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Vector3d expected = rz * Eigen::Vector3d(0, 1, 0) + rz * rz * Eigen::Vector3d(0, 1, 0);
  CHECK((p.row(2).transpose() - expected).norm() < 1e-12);
  CHECK((p.row(2) - Eigen::RowVector3d(-1, -1, 0)).norm() < 1e-12);

  CHECK_THROWS_AS(forward_kinematics(s3, ident, Eigen::Vector3d::Zero()), ShapeError);
}

TEST_CASE("forward kinematics translation properties") {
  std::mt19937_64 rng(12);
  Skeleton s = chain(5);
  std::vector<Quaternion> rot;
  for (int i = 0; i < 5; ++i) rot.push_back(random_unit(rng));
  const Eigen::Vector3d delta(0.4, -2.0, 7.0);
  JointMatrix a = forward_kinematics(s, rot, Eigen::Vector3d::Zero());
  JointMatrix b = forward_kinematics(s, rot, delta);
  for (int i = 0; i < 5; ++i) CHECK((b.row(i) - a.row(i) - delta.transpose()).norm() < 1e-12);
  CHECK((root_relative(a) - root_relative(b)).norm() < 1e-12);
  // Sign flips do not move joints.
  std::vector<Quaternion> flipped;
  for (auto& q : rot) flipped.push_back(-q);
  CHECK((forward_kinematics(s, flipped, delta) - b).norm() < 1e-12);
}

TEST_CASE("root_relative worked examples") {
  JointMatrix p(2, 3);
  p << 1, 1, 1, 2, 1, 1;
  JointMatrix r = root_relative(p);
  CHECK(r.row(0).norm() == 0.0);
  CHECK((r.row(1) - Eigen::RowVector3d(1, 0, 0)).norm() == 0.0);
  CHECK(root_relative(r) == r);
  JointMatrix single(1, 3);
  single << 5, 6, 7;
  CHECK(root_relative(single).norm() == 0.0);
}

TEST_CASE("finite difference velocities worked examples") {
  std::vector<JointMatrix> constant(4, JointMatrix::Constant(2, 3, 1.5));
  for (auto& v : finite_difference_velocities(constant, 30)) CHECK(v.norm() == 0.0);

  std::vector<JointMatrix> linear;
  for (int t = 0; t < 4; ++t) {
    JointMatrix m = JointMatrix::Zero(1, 3);
    m(0, 0) = t;
    linear.push_back(m);
  }
  for (auto& v : finite_difference_velocities(linear, 60)) {
    CHECK((v.row(0) - Eigen::RowVector3d(60, 0, 0)).norm() < 1e-12);
  }

  std::vector<JointMatrix> seq(3, JointMatrix::Zero(1, 3));
  seq[1](0, 1) = 1;
  seq[2](0, 1) = 3;
  auto v = finite_difference_velocities(seq, 1);
  CHECK(v[0](0, 1) == 1.0);
  CHECK(v[1](0, 1) == 1.0);
  CHECK(v[2](0, 1) == 2.0);

  CHECK_THROWS_AS(finite_difference_velocities(std::vector<JointMatrix>(1, JointMatrix::Zero(1, 3)), 1),
                  ShapeError);
}

TEST_CASE("frame features layout and inverse") {
  MotionFrame f;
  f.rotations = {Quaternion::identity()};
  f.positions = JointMatrix::Zero(1, 3);
  f.velocities = JointMatrix::Zero(1, 3);
  CHECK(frame_features(f) == std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0, 0, 0});

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2, 2);
  Skeleton s = chain(2);
  for (int k = 0; k < 20; ++k) {
    std::vector<std::vector<Quaternion>> rot(3);
    std::vector<Eigen::Vector3d> roots(3);
    for (int t = 0; t < 3; ++t) {
      rot[t] = {random_unit(rng), random_unit(rng)};
      roots[t] = Eigen::Vector3d(u(rng), u(rng), u(rng));
    }
    auto frames = assemble_frames(s, rot, roots, 30);
    for (const auto& fr : frames) {
      fr.validate();
      auto feats = frame_features(fr);
      CHECK(feats.size() == 20);
      auto back = frame_features(frame_from_features(feats, 2));
      for (std::size_t i = 0; i < feats.size(); ++i) CHECK(std::fabs(back[i] - feats[i]) < 1e-6);
    }
  }
}

TEST_CASE("labels") {
  StyleLabel s(2, 4);
  auto oh = s.one_hot();
  double total = 0;
  for (double v : oh) total += v;
  CHECK(total == 1.0);
  CHECK(oh[2] == 1.0);
  CHECK_THROWS_AS(StyleLabel(4, 4), RangeError);
  CHECK_THROWS_AS(ContentLabel(-1, 2), RangeError);
}

TEST_CASE("skeleton validation") {
  Skeleton s = chain(3);
  CHECK_NOTHROW(s.validate());
  Skeleton bad = s;
  bad.parents[2] = 2;
  CHECK_THROWS(bad.validate());
  Skeleton one = chain(1);
  CHECK_THROWS(one.validate());
  Skeleton nan = s;
  nan.offsets[1].x() = std::nan("");
  CHECK_THROWS(nan.validate());
}

TEST_CASE("frame validation") {
  MotionFrame f;
  f.rotations = {Quaternion{2, 0, 0, 0}};
  f.positions = JointMatrix::Zero(1, 3);
  f.velocities = JointMatrix::Zero(1, 3);
  CHECK_THROWS_AS(f.validate(), DomainError);
  f.rotations = {Quaternion::identity()};
  f.positions(0, 1) = 1.0;
  CHECK_THROWS_AS(f.validate(), DomainError);
}
