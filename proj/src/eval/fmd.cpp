#include "style_erd/eval/fmd.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/model/kinematics.hpp"
#include "style_erd/nn/checkpoint.hpp"
#include "style_erd/nn/layers.hpp"
#include "style_erd/nn/ops.hpp"
#include "style_erd/nn/optim.hpp"
#include "style_erd/train/losses.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace style_erd::eval {

using nn::Tensor;
using nn::Var;

namespace {

constexpr int kKernel = 4;
constexpr nn::ConvGeometry kGeometry{2, 1};
constexpr int kChannels[2] = {64, 96};
constexpr double kPsdTolerance = 1e-6;
constexpr const char* kFormat = "style_erd.fmd_extractor";

// Symmetric PSD square root by eigendecomposition; small negative
// eigenvalues are clamped, larger ones rejected.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -kPsdTolerance) {
    throw DomainError(std::string(what) + " is not positive semidefinite (eigenvalue " +
                      std::to_string(ev.minCoeff()) + ")");
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

FmdExtractor::FmdExtractor(int joints, int window, std::uint64_t seed)
    : joints_(joints), window_(window) {
  if (joints < 1) throw DomainError("FMD extractor needs at least one joint");
  const int t1 = nn::conv_output_length(window, kKernel, kGeometry);
  const int t2 = nn::conv_output_length(t1, kKernel, kGeometry);
  if (t2 < 1 || nn::conv_output_length(window, kKernel, kGeometry) * 2 != window || t1 != 2 * t2) {
    throw ShapeError("FMD extractor needs a window divisible by 4, got " + std::to_string(window));
  }
  std::mt19937_64 rng(seed);
  const int in = 4 * joints;
  params_.add("enc.0.W", nn::fan_in_tensor({kChannels[0], in, kKernel}, in * kKernel, rng));
  params_.add("enc.0.b", nn::fan_in_tensor({kChannels[0]}, in * kKernel, rng));
  params_.add("enc.1.W", nn::fan_in_tensor({kChannels[1], kChannels[0], kKernel}, kChannels[0] * kKernel, rng));
  params_.add("enc.1.b", nn::fan_in_tensor({kChannels[1]}, kChannels[0] * kKernel, rng));
  // Transposed convolutions: weights laid out as the adjoint conv's kernels.
  params_.add("dec.0.W", nn::fan_in_tensor({kChannels[1], kChannels[0], kKernel}, kChannels[1] * kKernel / 2, rng));
  params_.add("dec.0.b", nn::fan_in_tensor({kChannels[0]}, kChannels[1] * kKernel / 2, rng));
  params_.add("dec.1.W", nn::fan_in_tensor({kChannels[0], in, kKernel}, kChannels[0] * kKernel / 2, rng));
  params_.add("dec.1.b", nn::fan_in_tensor({in}, kChannels[0] * kKernel / 2, rng));
}

int FmdExtractor::feature_dim() const {
  const int t1 = nn::conv_output_length(window_, kKernel, kGeometry);
  return kChannels[1] * nn::conv_output_length(t1, kKernel, kGeometry);
}

Var FmdExtractor::encode(const Var& x) const {
  if (x.value().rank() != 3 || x.dim(1) != 4 * joints_ || x.dim(2) != window_) {
    throw ShapeError("FMD extractor: input " + nn::shape_string(x.shape()) + ", expected [N, " +
                     std::to_string(4 * joints_) + ", " + std::to_string(window_) + "]");
  }
  Var h = x;
  for (int l = 0; l < 2; ++l) {
    const std::string p = "enc." + std::to_string(l);
    h = nn::relu(nn::add_channel_bias(nn::conv1d(h, params_.get(p + ".W"), kGeometry),
                                      params_.get(p + ".b")));
  }
  return h;
}

Var FmdExtractor::reconstruct(const Var& x) const {
  const Var z = encode(x);
  const int t1 = nn::conv_output_length(window_, kKernel, kGeometry);
  Var h = nn::conv1d_input_grad(z, params_.get("dec.0.W"), t1, kGeometry);
  h = nn::relu(nn::add_channel_bias(h, params_.get("dec.0.b")));
  h = nn::conv1d_input_grad(h, params_.get("dec.1.W"), window_, kGeometry);
  h = nn::add_channel_bias(h, params_.get("dec.1.b"));
  const Var rows = nn::reshape(nn::permute3(h, {0, 2, 1}), {h.dim(0) * window_, 4 * joints_});
  return model::normalize_quaternions(rows);
}

Eigen::MatrixXd FmdExtractor::features(const Tensor& x) const {
  nn::NoGradGuard no_grad;
  const Tensor z = encode(nn::constant(x)).value();
  const int n = z.dim(0);
  const int d = static_cast<int>(z.size()) / std::max(n, 1);
  Eigen::MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) out(i, k) = z[static_cast<std::size_t>(i) * d + k];
  }
  return out;
}

nlohmann::json FmdExtractor::describe() const {
  return {{"joints", joints_},
          {"window", window_},
          {"encoder_channels", {4 * joints_, kChannels[0], kChannels[1]}},
          {"kernel", kKernel},
          {"stride", kGeometry.stride},
          {"padding", kGeometry.padding},
          {"feature_dim", feature_dim()}};
}

Tensor rotation_input(const std::vector<const std::vector<MotionFrame>*>& sequences) {
  if (sequences.empty()) throw ContractError("rotation_input: no sequences");
  const int n = static_cast<int>(sequences.size());
  const int t = static_cast<int>(sequences[0]->size());
  const int j = (*sequences[0])[0].joint_count();
  Tensor out({n, 4 * j, t});
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(sequences[i]->size()) != t) {
      throw ShapeError("rotation_input: sequences differ in length");
    }
    for (int f = 0; f < t; ++f) {
      const auto& rot = (*sequences[i])[f].rotations;
      if (static_cast<int>(rot.size()) != j) throw ShapeError("rotation_input: joint count differs");
      for (int k = 0; k < j; ++k) {
        out.at(i, 4 * k, f) = rot[k].w;
        out.at(i, 4 * k + 1, f) = rot[k].x;
        out.at(i, 4 * k + 2, f) = rot[k].y;
        out.at(i, 4 * k + 3, f) = rot[k].z;
      }
    }
  }
  return out;
}

Tensor rotation_input(const std::vector<io::MotionWindow>& windows) {
  std::vector<const std::vector<MotionFrame>*> seqs;
  for (const auto& w : windows) seqs.push_back(&w.frames);
  return rotation_input(seqs);
}

Tensor rows_from_channels(const Tensor& x) {
  nn::NoGradGuard no_grad;
  return nn::reshape(nn::permute3(nn::constant(x), {0, 2, 1}), {x.dim(0) * x.dim(2), x.dim(1)})
      .value();
}

Tensor add_rotation_noise(const Tensor& x, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Tensor out = x;
  const int n = x.dim(0), c = x.dim(1), t = x.dim(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c / 4; ++j) {
      for (int f = 0; f < t; ++f) {
        double q[4];
        double norm = 0.0;
        for (int k = 0; k < 4; ++k) {
          q[k] = x.at(i, 4 * j + k, f) + noise(rng);
          norm += q[k] * q[k];
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw NumericError("noise collapsed a quaternion to zero");
        const double sign = q[0] < 0.0 ? -1.0 : 1.0;
        for (int k = 0; k < 4; ++k) out.at(i, 4 * j + k, f) = sign * q[k] / norm;
      }
    }
  }
  return out;
}

double mean_angle_error(const Tensor& a, const Tensor& b) {
  nn::NoGradGuard no_grad;
  return train::loss_quat(nn::constant(a), nn::constant(b)).value().item();
}

FmdExtractor train_fmd_extractor(const std::vector<io::MotionWindow>& windows,
                                 const ExtractorTraining& options) {
  if (windows.empty()) throw ContractError("train_fmd_extractor: no windows");
  const Tensor clean = rotation_input(windows);
  FmdExtractor ex(clean.dim(1) / 4, clean.dim(2), options.seed);
  nn::Adam opt({options.lr});
  std::mt19937_64 rng(options.seed);
  std::vector<int> order(static_cast<std::size_t>(clean.dim(0)));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const int c = clean.dim(1), t = clean.dim(2);
  for (int e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(options.batch_size)) {
      const int b = static_cast<int>(std::min(order.size() - i, static_cast<std::size_t>(options.batch_size)));
      Tensor batch({b, c, t});
      for (int k = 0; k < b; ++k) {
        std::copy_n(clean.data().data() + static_cast<std::size_t>(order[i + k]) * c * t,
                    static_cast<std::size_t>(c) * t,
                    batch.data().data() + static_cast<std::size_t>(k) * c * t);
      }
      const Tensor noisy = add_rotation_noise(batch, options.noise, rng());
      const Var loss = train::loss_quat(ex.reconstruct(nn::constant(noisy)),
                                        nn::constant(rows_from_channels(batch)));
      opt.step(ex.params(), nn::grad(loss, std::span<const Var>(ex.params().vars())));
    }
  }
  ex.params().set_trainable(false);
  return ex;
}

void save_fmd_extractor(const std::filesystem::path& path, const FmdExtractor& extractor) {
  nlohmann::json header = extractor.describe();
  header["format"] = kFormat;
  nn::save_checkpoint(path, header, extractor.params());
}

FmdExtractor load_fmd_extractor(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(path);
  if (ckpt.header.value("format", std::string()) != kFormat) {
    throw std::runtime_error(path.string() + " is not an FMD extractor checkpoint");
  }
  FmdExtractor ex(ckpt.header.at("joints").get<int>(), ckpt.header.at("window").get<int>(), 0);
  nn::restore_params(ckpt, ex.params());
  ex.params().set_trainable(false);
  return ex;
}

void GaussianSummary::validate() const {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw ShapeError("Gaussian summary: covariance does not match mean dimension");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw DomainError("Gaussian summary: covariance is not symmetric");
  }
}

GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) throw DomainError("covariance needs at least two samples, got " + std::to_string(n));
  GaussianSummary g;
  g.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
  g.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  g.cov = 0.5 * (g.cov + g.cov.transpose());
  if (n < samples.cols()) g.cov.diagonal().array() += 1e-6;
  return g;
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  a.validate();
  b.validate();
  if (a.mean.size() != b.mean.size()) {
    throw ShapeError("frechet_distance: dimensions " + std::to_string(a.mean.size()) + " and " +
                     std::to_string(b.mean.size()));
  }
  // tr((S_a S_b)^(1/2)) = tr((sqrt(S_a) S_b sqrt(S_a))^(1/2)), the latter
  // symmetric.
  const Eigen::MatrixXd sa = psd_sqrt(a.cov, "covariance A");
  psd_sqrt(b.cov, "covariance B");
  const Eigen::MatrixXd m = sa * b.cov * sa;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -kPsdTolerance) {
    throw DomainError("covariance product has a negative eigenvalue " + std::to_string(ev.minCoeff()));
  }
  const double cross = ev.cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return std::max(d, 0.0);
}

FmdResult compute_fmd(const Tensor& set_a, const Tensor& set_b, const FmdExtractor& extractor) {
  const Eigen::MatrixXd fa = extractor.features(set_a);
  const Eigen::MatrixXd fb = extractor.features(set_b);
  FmdResult r;
  r.fmd = frechet_distance(fit_gaussian(fa), fit_gaussian(fb));
  r.n_a = static_cast<int>(fa.rows());
  r.n_b = static_cast<int>(fb.rows());
  r.feature_dim = static_cast<int>(fa.cols());
  return r;
}

nlohmann::json fmd_report(const FmdResult& result, const std::string& set_a,
                          const std::string& set_b, const FmdExtractor& extractor) {
  return {{"pair", {{"set_a", set_a}, {"set_b", set_b}}},
          {"fmd", result.fmd},
          {"n_a", result.n_a},
          {"n_b", result.n_b},
          {"feature_dim", result.feature_dim},
          {"extractor", extractor.describe()}};
}

}  // namespace style_erd::eval
