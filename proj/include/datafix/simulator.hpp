#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "datafix/dataset.hpp"
#include "datafix/rng.hpp"

namespace datafix {

enum class Family { kGaussian, kLognormal, kLogitNormal, kBernoulli, kGaussianMixture, kBernoulliMixture };

std::string to_string(Family family);

/// A Gaussian with its lower Cholesky factor.
struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd chol;
  double log_det = 0.0;

  /// Throws std::domain_error when `cov` is not positive definite.
  static GaussianComponent make(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  double log_density(const Eigen::VectorXd& v) const;
};

/// Equal- or arbitrarily-weighted mixture of either (transformed)
/// Gaussians or independent Bernoulli products.
class Distribution {
 public:
  enum class Transform { kNone, kExp, kSigmoid };

  Distribution() = default;
  static Distribution gaussian(Transform transform, std::vector<double> weights,
                               std::vector<GaussianComponent> components);
  static Distribution bernoulli(std::vector<double> weights, std::vector<Eigen::VectorXd> freqs);

  std::size_t dim() const;
  bool is_discrete() const { return !freqs_.empty(); }
  Transform transform() const { return transform_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const std::vector<Eigen::VectorXd>& frequencies() const { return freqs_; }

  /// Rows are drawn in fixed-size chunks on derived streams, so the result
  /// does not depend on the thread count.
  Matrix sample(std::size_t n, SeededRng rng) const;
  double log_density(std::span<const double> x) const;

 private:
  Transform transform_ = Transform::kNone;
  std::vector<double> weights_;
  std::vector<GaussianComponent> components_;
  std::vector<Eigen::VectorXd> freqs_;
};

/// One of the fifteen reference/query distribution pairs.
struct SimSpec {
  int id = 1;
  Family family = Family::kGaussian;
  std::size_t d = 0;
  std::size_t n_corrupted = 0;
  /// Covariance kernel scale (0 when the family has no kernel).
  double kernel_scale = 0.0;
  std::uint64_t seed = 0;
  /// Shifted columns C, increasing.
  std::vector<std::size_t> corrupted;
  Distribution p;
  Distribution q;
};

/// Kernel covariance exp(-(g_i - g_j)^2 / s) over a shuffled grid
/// g = perm / d in [0, 1). A small diagonal jitter is added (and the
/// matrix rescaled back to unit diagonal) until Cholesky succeeds.
Eigen::MatrixXd kernel_covariance(std::size_t d, double s, SeededRng rng);

/// Builds dataset `id` (1..15). Requires 1 <= n_corrupted and
/// 2 * n_corrupted < d.
SimSpec build_spec(int id, std::size_t d, std::size_t n_corrupted, std::uint64_t seed);

struct SimSample {
  Dataset reference;
  Dataset query;
  CorruptionMask mask;
};

/// Draws n_ref rows from p and n_query rows from q. Bernoulli families
/// produce categorical columns.
SimSample sample_pair(const SimSpec& spec, std::size_t n_ref, std::size_t n_query, SeededRng rng);

struct TvEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of E_p[max(0, 1 - q/p)] with log-ratios clipped
/// to [-700, 700].
TvEstimate mc_tv_oracle(const Distribution& p, const Distribution& q, std::size_t n_mc,
                        SeededRng rng);

}  // namespace datafix
