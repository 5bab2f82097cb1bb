#pragma once

#include "style_erd/io/dataset.hpp"
#include "style_erd/nn/params.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace style_erd::eval {

// Denoising autoencoder over rotation channels. Encoder: two stride-2
// convolutions 4J -> 64 -> 96 (kernel 4, padding 1, relu); decoder: the
// mirrored transposed convolutions back to 4J, renormalized to unit
// quaternions. The feature is the flattened last encoder activation.
class FmdExtractor {
 public:
  FmdExtractor(int joints, int window, std::uint64_t seed);

  int joints() const noexcept { return joints_; }
  int window() const noexcept { return window_; }
  int feature_dim() const;
  nn::ParamStore& params() noexcept { return params_; }
  const nn::ParamStore& params() const noexcept { return params_; }

  // x [N, 4J, T] -> [N, 96, T/4].
  nn::Var encode(const nn::Var& x) const;
  // -> [N * T, 4J] unit quaternions, rows n * T + t.
  nn::Var reconstruct(const nn::Var& x) const;
  // [N, feature_dim] plain features.
  Eigen::MatrixXd features(const nn::Tensor& x) const;

  nlohmann::json describe() const;

 private:
  int joints_;
  int window_;
  nn::ParamStore params_;
};

// [N, 4J, T] rotation channels of equal-length frame sequences.
nn::Tensor rotation_input(const std::vector<const std::vector<MotionFrame>*>& sequences);
nn::Tensor rotation_input(const std::vector<io::MotionWindow>& windows);
// Adds N(0, sigma) to every quaternion component and renormalizes per joint.
nn::Tensor add_rotation_noise(const nn::Tensor& x, double sigma, std::uint64_t seed);
// Mean angle between unit quaternion rows [M, 4J] of `a` and `b`.
double mean_angle_error(const nn::Tensor& a, const nn::Tensor& b);
// [N, 4J, T] -> [N * T, 4J].
nn::Tensor rows_from_channels(const nn::Tensor& x);

struct ExtractorTraining {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-3;
  double noise = 0.03;
  std::uint64_t seed = 1;
};

// Minimizes the mean rotation angle between the reconstruction of noisy
// windows and the clean rotations. Returned frozen.
FmdExtractor train_fmd_extractor(const std::vector<io::MotionWindow>& windows,
                                 const ExtractorTraining& options);

void save_fmd_extractor(const std::filesystem::path& path, const FmdExtractor& extractor);
FmdExtractor load_fmd_extractor(const std::filesystem::path& path);

struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  void validate() const;
};

// Sample mean and unbiased covariance of rows; adds 1e-6 I when there are
// fewer rows than dimensions. Throws DomainError for fewer than two rows.
GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples);

// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)).
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

struct FmdResult {
  double fmd = 0.0;
  int n_a = 0;
  int n_b = 0;
  int feature_dim = 0;
};

FmdResult compute_fmd(const nn::Tensor& set_a, const nn::Tensor& set_b,
                      const FmdExtractor& extractor);

nlohmann::json fmd_report(const FmdResult& result, const std::string& set_a,
                          const std::string& set_b, const FmdExtractor& extractor);

}  // namespace style_erd::eval
