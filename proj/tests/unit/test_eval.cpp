#include "doctest.h"

#include "model_fixtures.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/eval/fmd.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/nn/ops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <random>

using namespace style_erd;
using namespace style_erd::eval;

namespace {

GaussianSummary gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) { return {std::move(mean), std::move(cov)}; }

Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = n(rng);
  }
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

std::vector<io::MotionWindow> style_windows(int style, int clips, std::uint64_t seed) {
  io::SynthDatasetConfig dc;
  dc.clips_per_pair = clips;
  dc.contents = 1;
  dc.seed = seed;
  std::vector<io::MotionClip> keep;
  for (auto& c : io::make_synthetic_dataset(dc)) {
    if (c.style.index == style) keep.push_back(std::move(c));
  }
  return io::window_clips(keep).windows;
}

struct TrainedExtractor {
  std::vector<io::MotionWindow> train;
  std::vector<io::MotionWindow> held_out;
  FmdExtractor extractor{13, 24, 1};

  TrainedExtractor() {
    io::SynthDatasetConfig dc;
    dc.clips_per_pair = 8;
    auto [a, b] = io::split_dataset(io::make_synthetic_dataset(dc), 0.25, 2);
    train = io::window_clips(a).windows;
    held_out = io::window_clips(b).windows;
    extractor = train_fmd_extractor(train, {});
  }
};

const TrainedExtractor& trained() {
  static const TrainedExtractor t;
  return t;
}

}  // namespace

TEST_CASE("frechet distance closed forms") {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const auto a = gaussian(Eigen::Vector2d(0.3, -1.0), 2.0 * i2);
  CHECK(std::fabs(frechet_distance(a, a)) < 1e-9);
  CHECK(frechet_distance(gaussian(Eigen::Vector2d(0, 0), i2), gaussian(Eigen::Vector2d(1, 0), i2)) ==
        doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::fabs(frechet_distance(gaussian(Eigen::Vector2d::Zero(), 4.0 * i2),
                                   gaussian(Eigen::Vector2d::Zero(), i2)) -
                  2.0) < 1e-8);
  // One dimension: (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2.
  Eigen::VectorXd m1(1), m2(1);
  m1 << 1.0;
  m2 << -2.0;
  Eigen::MatrixXd v1(1, 1), v2(1, 1);
  v1 << 9.0;
  v2 << 0.25;
  CHECK(frechet_distance(gaussian(m1, v1), gaussian(m2, v2)) == doctest::Approx(9.0 + 6.25));
}

TEST_CASE("frechet distance matches the two-by-two trace identity") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const Eigen::MatrixXd sa = random_spd(2, rng);
    const Eigen::MatrixXd sb = random_spd(2, rng);
    const Eigen::Vector2d ma(n(rng), n(rng));
    const Eigen::Vector2d mb(n(rng), n(rng));
    // For 2x2 M with positive eigenvalues, tr sqrt(M) = sqrt(tr M + 2 sqrt(det M)).
    const Eigen::MatrixXd m = sa * sb;
    const double tr_sqrt = std::sqrt(m.trace() + 2.0 * std::sqrt(m.determinant()));
    const double expected = (ma - mb).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_sqrt;
    const double got = frechet_distance(gaussian(ma, sa), gaussian(mb, sb));
    CHECK(got == doctest::Approx(expected).epsilon(1e-8));
    CHECK(got == doctest::Approx(frechet_distance(gaussian(mb, sb), gaussian(ma, sa))).epsilon(1e-9));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("frechet distance properties in higher dimension") {
  std::mt19937_64 rng(4);
  for (int d : {3, 7, 20}) {
    const Eigen::MatrixXd s = random_spd(d, rng);
    const Eigen::VectorXd mu = Eigen::VectorXd::Random(d);
    CHECK(std::fabs(frechet_distance(gaussian(mu, s), gaussian(mu, s))) < 1e-7 * s.trace());
    const Eigen::MatrixXd t = random_spd(d, rng);
    const Eigen::VectorXd nu = Eigen::VectorXd::Random(d);
    const double ab = frechet_distance(gaussian(mu, s), gaussian(nu, t));
    CHECK(ab == doctest::Approx(frechet_distance(gaussian(nu, t), gaussian(mu, s))).epsilon(1e-8));
    // Shifting the mean alone adds exactly the squared shift.
    const double shifted = frechet_distance(gaussian(mu, s), gaussian(mu + Eigen::VectorXd::Ones(d), s));
    CHECK(shifted == doctest::Approx(static_cast<double>(d)).epsilon(1e-6));
    // Commuting covariances: sum of (sqrt a_i - sqrt b_i)^2.
    Eigen::VectorXd da = Eigen::VectorXd::Random(d).cwiseAbs().array() + 0.1;
    Eigen::VectorXd db = Eigen::VectorXd::Random(d).cwiseAbs().array() + 0.1;
    const double diag = frechet_distance(gaussian(mu, da.asDiagonal()), gaussian(mu, db.asDiagonal()));
    CHECK(diag == doctest::Approx((da.cwiseSqrt() - db.cwiseSqrt()).squaredNorm()).epsilon(1e-8));
  }
}

TEST_CASE("frechet distance rejects malformed summaries") {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(frechet_distance(gaussian(Eigen::Vector2d::Zero(), i2), gaussian(Eigen::Vector3d::Zero(), i3)),
                  ShapeError);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(frechet_distance(gaussian(Eigen::Vector2d::Zero(), bad), gaussian(Eigen::Vector2d::Zero(), i2)),
                  DomainError);
  Eigen::MatrixXd skew(2, 2);
  skew << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(gaussian(Eigen::Vector2d::Zero(), skew).validate(), DomainError);
  CHECK_THROWS_AS(fit_gaussian(Eigen::MatrixXd::Ones(1, 4)), DomainError);
}

TEST_CASE("gaussian fit uses the unbiased covariance") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 2, 0, 0, 2, 2, 2;
  const GaussianSummary g = fit_gaussian(x);
  CHECK(g.mean(0) == doctest::Approx(1.0));
  CHECK(g.mean(1) == doctest::Approx(1.0));
  CHECK(g.cov(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(g.cov(1, 1) == doctest::Approx(4.0 / 3.0));
  CHECK(g.cov(0, 1) == doctest::Approx(0.0));
  // Fewer rows than dimensions: ridge keeps the matrix positive definite.
  const GaussianSummary wide = fit_gaussian(Eigen::MatrixXd::Random(3, 6));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wide.cov);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("extractor shapes and validation") {
  const FmdExtractor e(13, 24, 3);
  CHECK(e.feature_dim() == 96 * 6);
  const auto windows = testing::labeled_windows(testing::synth_config(), 3, 1);
  const nn::Tensor x = rotation_input(windows);
  CHECK(x.shape() == nn::Shape{3, 52, 24});
  const Eigen::MatrixXd f = e.features(x);
  CHECK(f.rows() == 3);
  CHECK(f.cols() == e.feature_dim());
  CHECK(f.allFinite());
  const nn::Var r = e.reconstruct(nn::constant(x));
  CHECK(r.value().shape() == nn::Shape{72, 52});
  for (int row = 0; row < 72; ++row) {
    for (int j = 0; j < 13; ++j) {
      double n2 = 0.0;
      for (int k = 0; k < 4; ++k) n2 += r.value().at(row, 4 * j + k) * r.value().at(row, 4 * j + k);
      CHECK(n2 == doctest::Approx(1.0));
    }
  }
  CHECK_THROWS_AS(FmdExtractor(13, 22, 1), ShapeError);
  CHECK_THROWS_AS(e.features(nn::Tensor({1, 40, 24})), ShapeError);
  const nn::Tensor rows = rows_from_channels(x);
  CHECK(rows.at(24 + 5, 4 * 2 + 1) == x.at(1, 4 * 2 + 1, 5));
  CHECK(e.describe().contains("feature_dim"));
}

TEST_CASE("rotation noise keeps unit quaternions and scales the error") {
  const auto windows = testing::labeled_windows(testing::synth_config(), 4, 2);
  const nn::Tensor x = rotation_input(windows);
  const nn::Tensor clean = rows_from_channels(x);
  CHECK(mean_angle_error(clean, clean) == doctest::Approx(0.0));
  const double small = mean_angle_error(rows_from_channels(add_rotation_noise(x, 0.01, 3)), clean);
  const double large = mean_angle_error(rows_from_channels(add_rotation_noise(x, 0.05, 3)), clean);
  CHECK(small > 0.0);
  CHECK(large > 3.0 * small);
  const nn::Tensor again = add_rotation_noise(x, 0.05, 3);
  CHECK(again.storage() == add_rotation_noise(x, 0.05, 3).storage());
}

TEST_CASE("trained extractor denoises held-out windows") {
  const auto& t = trained();
  const nn::Tensor clean = rotation_input(t.held_out);
  const nn::Tensor noisy = add_rotation_noise(clean, 0.03, 99);
  const double identity = mean_angle_error(rows_from_channels(noisy), rows_from_channels(clean));
  double denoised = 0.0;
  {
    nn::NoGradGuard guard;
    denoised = mean_angle_error(t.extractor.reconstruct(nn::constant(noisy)).value(), rows_from_channels(clean));
  }
  MESSAGE("identity " << identity << " denoised " << denoised);
  CHECK(denoised <= 0.7 * identity);
  CHECK_FALSE(t.extractor.params().trainable());
}

TEST_CASE("extractor training is deterministic and checkpoints round trip") {
  const auto windows = testing::labeled_windows(testing::synth_config(), 8, 4);
  ExtractorTraining et;
  et.epochs = 2;
  const FmdExtractor a = train_fmd_extractor(windows, et);
  const FmdExtractor b = train_fmd_extractor(windows, et);
  CHECK(a.params().checksum() == b.params().checksum());
  const auto path = std::filesystem::temp_directory_path() / "style_erd_fmd_test.ckpt";
  save_fmd_extractor(path, a);
  const FmdExtractor c = load_fmd_extractor(path);
  CHECK(c.params().checksum() == a.params().checksum());
  CHECK(c.window() == 24);
  CHECK(c.joints() == 13);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(train_fmd_extractor({}, et), ContractError);
}

TEST_CASE("motion distance separates styles") {
  const auto& t = trained();
  const auto neutral = style_windows(0, 8, 21);
  const auto proud = style_windows(1, 8, 21);
  const nn::Tensor xn = rotation_input(neutral);
  const nn::Tensor xp = rotation_input(proud);
  const FmdResult self = compute_fmd(xn, xn, t.extractor);
  CHECK(std::fabs(self.fmd) < 1e-6);
  const FmdResult ab = compute_fmd(xn, xp, t.extractor);
  const FmdResult ba = compute_fmd(xp, xn, t.extractor);
  CHECK(ab.fmd == doctest::Approx(ba.fmd).epsilon(1e-6));
  CHECK(ab.n_a == static_cast<int>(neutral.size()));
  CHECK(ab.feature_dim == t.extractor.feature_dim());

  // Two halves of the same style sit much closer than two styles.
  std::vector<io::MotionWindow> first(neutral.begin(), neutral.begin() + neutral.size() / 2);
  std::vector<io::MotionWindow> second(neutral.begin() + neutral.size() / 2, neutral.end());
  const double within = compute_fmd(rotation_input(first), rotation_input(second), t.extractor).fmd;
  MESSAGE("within " << within << " across " << ab.fmd);
  CHECK(within < 0.5 * ab.fmd);

  const auto report = fmd_report(ab, "neutral", "proud", t.extractor);
  for (const char* k : {"pair", "fmd", "n_a", "n_b", "feature_dim", "extractor"}) CHECK(report.contains(k));
  CHECK(report["pair"]["set_a"] == "neutral");
  CHECK(report["pair"]["set_b"] == "proud");
  CHECK_THROWS_AS(compute_fmd(xn, rotation_input(testing::labeled_windows(testing::tiny_config(), 3, 1)),
                              t.extractor),
                  ShapeError);
}
