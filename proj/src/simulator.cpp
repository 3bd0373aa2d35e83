#include "datafix/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "datafix/parallel.hpp"

namespace datafix {
namespace {

constexpr std::size_t kSampleChunk = 512;
constexpr std::size_t kOracleChunk = 4096;
constexpr double kLogRatioClip = 700.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

std::size_t pick_component(const std::vector<double>& weights, SeededRng& rng) {
  if (weights.size() == 1) return 0;
  double u = rng.uniform();
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  return weights.size() - 1;
}

std::vector<double> equal_weights(std::size_t k) {
  return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::kGaussian: return "gaussian";
    case Family::kLognormal: return "lognormal";
    case Family::kLogitNormal: return "logit-normal";
    case Family::kBernoulli: return "bernoulli";
    case Family::kGaussianMixture: return "gaussian-mixture";
    case Family::kBernoulliMixture: return "bernoulli-mixture";
  }
  return "unknown";
}

GaussianComponent GaussianComponent::make(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("GaussianComponent: mean/covariance size mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("GaussianComponent: covariance is not positive definite");
  }
  GaussianComponent c;
  c.mean = std::move(mean);
  c.cov = std::move(cov);
  c.chol = llt.matrixL();
  c.log_det = 2.0 * c.chol.diagonal().array().log().sum();
  return c;
}

double GaussianComponent::log_density(const Eigen::VectorXd& v) const {
  const Eigen::VectorXd y = chol.triangularView<Eigen::Lower>().solve(v - mean);
  const auto d = static_cast<double>(mean.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + y.squaredNorm());
}

Distribution Distribution::gaussian(Transform transform, std::vector<double> weights,
                                    std::vector<GaussianComponent> components) {
  if (components.empty() || weights.size() != components.size()) {
    throw std::invalid_argument("Distribution: weights and components must match");
  }
  Distribution dist;
  dist.transform_ = transform;
  dist.weights_ = std::move(weights);
  dist.components_ = std::move(components);
  return dist;
}

Distribution Distribution::bernoulli(std::vector<double> weights,
                                     std::vector<Eigen::VectorXd> freqs) {
  if (freqs.empty() || weights.size() != freqs.size()) {
    throw std::invalid_argument("Distribution: weights and frequencies must match");
  }
  for (const auto& f : freqs) {
    if ((f.array() < 0.0).any() || (f.array() > 1.0).any()) {
      throw std::invalid_argument("Distribution: frequencies must lie in [0, 1]");
    }
  }
  Distribution dist;
  dist.weights_ = std::move(weights);
  dist.freqs_ = std::move(freqs);
  return dist;
}

std::size_t Distribution::dim() const {
  if (!freqs_.empty()) return static_cast<std::size_t>(freqs_.front().size());
  if (!components_.empty()) return static_cast<std::size_t>(components_.front().mean.size());
  return 0;
}

Matrix Distribution::sample(std::size_t n, SeededRng rng) const {
  const std::size_t d = dim();
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, [&](std::size_t c) {
    auto local = rng.derive(c);
    const std::size_t end = std::min(n, (c + 1) * kSampleChunk);
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (std::size_t i = c * kSampleChunk; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const std::size_t k = pick_component(weights_, local);
      if (is_discrete()) {
        for (std::size_t j = 0; j < d; ++j) {
          const auto jj = static_cast<Eigen::Index>(j);
          out(row, jj) = local.uniform() < freqs_[k](jj) ? 1.0 : 0.0;
        }
        continue;
      }
      for (auto& v : z) v = local.normal();
      const auto& comp = components_[k];
      const Eigen::VectorXd v = comp.mean + comp.chol.triangularView<Eigen::Lower>() * z;
      for (std::size_t j = 0; j < d; ++j) {
        const double vj = v(static_cast<Eigen::Index>(j));
        double x = vj;
        if (transform_ == Transform::kExp) x = std::exp(vj);
        if (transform_ == Transform::kSigmoid) x = sigmoid(vj);
        out(row, static_cast<Eigen::Index>(j)) = x;
      }
    }
  });
  return out;
}

double Distribution::log_density(std::span<const double> x) const {
  const std::size_t d = dim();
  if (x.size() != d) throw std::invalid_argument("log_density: dimension mismatch");
  std::vector<double> terms(weights_.size());

  if (is_discrete()) {
    for (std::size_t k = 0; k < freqs_.size(); ++k) {
      double s = std::log(weights_[k]);
      for (std::size_t j = 0; j < d && s != kNegInf; ++j) {
        const double f = freqs_[k](static_cast<Eigen::Index>(j));
        if (x[j] == 1.0) {
          s += f > 0.0 ? std::log(f) : kNegInf;
        } else if (x[j] == 0.0) {
          s += f < 1.0 ? std::log1p(-f) : kNegInf;
        } else {
          s = kNegInf;
        }
      }
      terms[k] = s;
    }
    return log_sum_exp(terms);
  }

  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  double jacobian = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double xj = x[j];
    const auto jj = static_cast<Eigen::Index>(j);
    switch (transform_) {
      case Transform::kNone:
        v(jj) = xj;
        break;
      case Transform::kExp:
        if (!(xj > 0.0)) return kNegInf;
        v(jj) = std::log(xj);
        jacobian -= v(jj);
        break;
      case Transform::kSigmoid:
        if (!(xj > 0.0 && xj < 1.0)) return kNegInf;
        v(jj) = std::log(xj) - std::log1p(-xj);
        jacobian -= std::log(xj) + std::log1p(-xj);
        break;
    }
  }
  for (std::size_t k = 0; k < components_.size(); ++k) {
    terms[k] = std::log(weights_[k]) + components_[k].log_density(v);
  }
  return log_sum_exp(terms) + jacobian;
}

Eigen::MatrixXd kernel_covariance(std::size_t d, double s, SeededRng rng) {
  if (!(s > 0.0)) throw std::invalid_argument("kernel_covariance: scale must be positive");
  const auto perm = rng.permutation(d);
  Eigen::VectorXd grid(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    grid(static_cast<Eigen::Index>(i)) = static_cast<double>(perm[i]) / static_cast<double>(d);
  }
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = grid(i) - grid(j);
      k(i, j) = std::exp(-diff * diff / s);
    }
  }
  for (double jitter = 1e-6; jitter < 1.0; jitter *= 10.0) {
    Eigen::MatrixXd cov = k;
    cov.diagonal().array() += jitter;
    cov /= 1.0 + jitter;
    if (Eigen::LLT<Eigen::MatrixXd>(cov).info() == Eigen::Success) return cov;
  }
  throw std::domain_error("kernel_covariance: could not make the kernel positive definite");
}

SimSpec build_spec(int id, std::size_t d, std::size_t n_corrupted, std::uint64_t seed) {
  if (id < 1 || id > 15) throw std::invalid_argument("build_spec: dataset id must be in 1..15");
  if (n_corrupted == 0 || 2 * n_corrupted >= d) {
    throw std::invalid_argument("build_spec: need 1 <= n_corrupted < d / 2");
  }
  SeededRng rng(seed);
  SimSpec spec;
  spec.id = id;
  spec.d = d;
  spec.n_corrupted = n_corrupted;
  spec.seed = seed;
  auto order = rng.derive(0).permutation(d);
  spec.corrupted.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_corrupted));
  std::sort(spec.corrupted.begin(), spec.corrupted.end());
  const auto& c = spec.corrupted;
  const auto n = static_cast<Eigen::Index>(d);

  auto in_c = std::vector<bool>(d, false);
  for (auto j : c) in_c[j] = true;
  auto shift_c = [&](Eigen::VectorXd v, double delta) {
    for (auto j : c) v(static_cast<Eigen::Index>(j)) += delta;
    return v;
  };
  // Keeps the C and non-C blocks of `cov`, zeroing the cross terms; the C
  // block is replaced by the identity when `identity_c` is set.
  auto decouple = [&](const Eigen::MatrixXd& cov, bool identity_c) {
    Eigen::MatrixXd out = cov;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const bool ci = in_c[static_cast<std::size_t>(i)];
        const bool cj = in_c[static_cast<std::size_t>(j)];
        if (ci != cj) out(i, j) = 0.0;
        if (identity_c && ci && cj) out(i, j) = i == j ? 1.0 : 0.0;
      }
    }
    return out;
  };
  auto single = [](Distribution::Transform t, Eigen::VectorXd mean, Eigen::MatrixXd cov) {
    return Distribution::gaussian(t, {1.0}, {GaussianComponent::make(std::move(mean), std::move(cov))});
  };

  using T = Distribution::Transform;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);

  switch (id) {
    case 1:
    case 2: {
      spec.family = Family::kGaussian;
      spec.p = single(T::kNone, zero, eye);
      if (id == 1) {
        spec.q = single(T::kNone, shift_c(zero, 0.5), eye);
      } else {
        Eigen::MatrixXd cov = eye;
        for (auto j : c) cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.5;
        spec.q = single(T::kNone, zero, cov);
      }
      break;
    }
    case 3:
    case 4:
    case 5:
    case 6:
    case 7:
    case 8: {
      const T t = id == 3 ? T::kNone : (id <= 5 ? T::kExp : T::kSigmoid);
      spec.family = id == 3 ? Family::kGaussian : (id <= 5 ? Family::kLognormal : Family::kLogitNormal);
      spec.kernel_scale = (id == 5 || id == 7 || id == 8) ? 0.002 : 0.05;
      const Eigen::MatrixXd sigma = kernel_covariance(d, spec.kernel_scale, rng.derive(1));
      spec.p = single(t, zero, sigma);
      if (id == 3 || id == 4 || id == 6) {
        spec.q = single(t, shift_c(zero, 0.5), sigma);
      } else {
        spec.q = single(t, zero, decouple(sigma, id != 8));
      }
      break;
    }
    case 9:
    case 10:
    case 11:
    case 12: {
      static constexpr double kNoise[] = {0.05, 0.1, 0.5, 1.0};
      spec.family = Family::kBernoulli;
      auto frng = rng.derive(2);
      auto erng = rng.derive(3);
      Eigen::VectorXd f(n);
      for (auto& v : f) v = sigmoid(frng.normal(0.0, std::sqrt(2.0)));
      Eigen::VectorXd g = f;
      for (auto j : c) {
        const auto jj = static_cast<Eigen::Index>(j);
        g(jj) = std::clamp(f(jj) + kNoise[id - 9] * erng.normal(), 0.0, 1.0);
      }
      spec.p = Distribution::bernoulli({1.0}, {f});
      spec.q = Distribution::bernoulli({1.0}, {g});
      break;
    }
    case 13: {
      spec.family = Family::kGaussianMixture;
      spec.kernel_scale = 0.3;
      std::vector<GaussianComponent> p_comp, q_comp;
      for (std::size_t k = 0; k < 3; ++k) {
        auto mrng = rng.derive(4 + k);
        Eigen::VectorXd mu(n);
        for (auto& v : mu) v = mrng.normal(0.0, 0.1);
        const Eigen::MatrixXd sigma = kernel_covariance(d, spec.kernel_scale, rng.derive(10 + k));
        p_comp.push_back(GaussianComponent::make(mu, sigma));
        q_comp.push_back(GaussianComponent::make(k == 0 ? shift_c(mu, 10.0) : mu, sigma));
      }
      spec.p = Distribution::gaussian(T::kNone, equal_weights(3), std::move(p_comp));
      spec.q = Distribution::gaussian(T::kNone, equal_weights(3), std::move(q_comp));
      break;
    }
    case 14:
    case 15: {
      spec.family = Family::kBernoulliMixture;
      std::vector<Eigen::VectorXd> f(3, Eigen::VectorXd(n));
      for (std::size_t k = 0; k < 3; ++k) {
        auto frng = rng.derive(20 + k);
        for (auto& v : f[k]) v = frng.uniform();
      }
      auto g = f;
      for (auto j : c) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (id == 14) {
          const double mean = (f[0](jj) + f[1](jj) + f[2](jj)) / 3.0;
          for (auto& gk : g) gk(jj) = mean;
        } else {
          g[0](jj) = std::clamp(f[0](jj) + 0.2, 0.0, 1.0);
        }
      }
      spec.p = Distribution::bernoulli(equal_weights(3), std::move(f));
      spec.q = Distribution::bernoulli(equal_weights(3), std::move(g));
      break;
    }
  }
  return spec;
}

SimSample sample_pair(const SimSpec& spec, std::size_t n_ref, std::size_t n_query, SeededRng rng) {
  if (n_ref == 0 || n_query == 0) throw std::invalid_argument("sample_pair: sizes must be positive");
  const auto kind = spec.p.is_discrete() ? FeatureKind::kCategorical : FeatureKind::kContinuous;
  std::vector<FeatureKind> kinds(spec.d, kind);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < spec.d; ++j) names.push_back("f" + std::to_string(j));
  return {Dataset(spec.p.sample(n_ref, rng.derive(0)), kinds, names),
          Dataset(spec.q.sample(n_query, rng.derive(1)), kinds, names),
          CorruptionMask(spec.corrupted, spec.d)};
}

TvEstimate mc_tv_oracle(const Distribution& p, const Distribution& q, std::size_t n_mc,
                        SeededRng rng) {
  if (n_mc < 2) throw std::invalid_argument("mc_tv_oracle: need at least 2 draws");
  if (p.dim() != q.dim()) throw std::invalid_argument("mc_tv_oracle: dimension mismatch");
  const std::size_t chunks = (n_mc + kOracleChunk - 1) / kOracleChunk;
  std::vector<double> sums(chunks, 0.0), squares(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t len = std::min(kOracleChunk, n_mc - c * kOracleChunk);
    const Matrix draws = p.sample(len, rng.derive(c));
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      const std::span<const double> x(draws.row(i).data(), static_cast<std::size_t>(draws.cols()));
      const double lp = p.log_density(x);
      const double lq = q.log_density(x);
      double lr;
      if (lq == kNegInf) {
        lr = -kLogRatioClip;
      } else if (lp == kNegInf) {
        lr = kLogRatioClip;
      } else {
        lr = std::clamp(lq - lp, -kLogRatioClip, kLogRatioClip);
      }
      const double term = std::max(0.0, 1.0 - std::exp(lr));
      sums[c] += term;
      squares[c] += term * term;
    }
  });
  double sum = 0.0, sq = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    sum += sums[c];
    sq += squares[c];
  }
  const auto n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sq / n - mean * mean) * n / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace datafix
