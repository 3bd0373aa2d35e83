#include "datafix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Core>

#include "datafix/parallel.hpp"

namespace datafix {
namespace {

constexpr double kDistanceFloor = 1e-12;

double squared_distance(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

Matrix subsample(const Matrix& m, std::size_t max_rows, SeededRng& rng) {
  const auto n = static_cast<std::size_t>(m.rows());
  if (n <= max_rows) return m;
  auto idx = rng.permutation(n);
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  Matrix out(static_cast<Eigen::Index>(max_rows), m.cols());
  for (std::size_t i = 0; i < max_rows; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

// One half-step of log-domain Sinkhorn: for each row i of `cost`,
// out_i = eps * log_w - eps * LSE_j((other_j - cost_ij) / eps).
// Returns the L1 violation of the marginal constraint before the update.
double sinkhorn_update(const Eigen::MatrixXd& cost, const Eigen::VectorXd& other, double eps,
                       double log_w, Eigen::VectorXd& out) {
  const Eigen::Index n = cost.cols();  // cost is stored transposed: column i = row i
  double violation = 0.0;
  const double w = std::exp(log_w);
  Eigen::ArrayXd z(cost.rows());
  const double inv_eps = 1.0 / eps;
  for (Eigen::Index i = 0; i < n; ++i) {
    z = (other.array() - cost.col(i).array()) * inv_eps;
    const double mx = z.maxCoeff();
    const double lse = mx + std::log((z - mx).exp().sum());
    const double updated = eps * log_w - eps * lse;
    violation += std::abs(w * std::exp((out(i) - updated) / eps) - w);
    out(i) = updated;
  }
  return violation;
}

}  // namespace

LocalizationScore f1_localization(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth) {
  if (predicted.empty() && truth.empty()) return {1.0, 1.0, 1.0};
  std::vector<std::size_t> p(predicted.begin(), predicted.end());
  std::vector<std::size_t> t(truth.begin(), truth.end());
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::vector<std::size_t> hit;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(hit));
  LocalizationScore s;
  s.precision = p.empty() ? 0.0 : static_cast<double>(hit.size()) / static_cast<double>(p.size());
  s.recall = t.empty() ? 0.0 : static_cast<double>(hit.size()) / static_cast<double>(t.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

LocalizationScore f1_localization(const CorruptionMask& predicted, const CorruptionMask& truth) {
  return f1_localization(predicted.indices(), truth.indices());
}

double sinkhorn_cost(const Matrix& x, const Matrix& y, const SinkhornConfig& config) {
  if (x.rows() == 0 || y.rows() == 0) throw std::invalid_argument("sinkhorn_cost: empty input");
  if (x.cols() != y.cols()) throw std::invalid_argument("sinkhorn_cost: width mismatch");
  const Eigen::Index n = x.rows(), m = y.rows(), d = x.cols();

  // cost_xy(j, i) = |x_i - y_j|^2 (column i holds row i's costs); cost_yx is its transpose.
  Eigen::MatrixXd cost_xy(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cost_xy(j, i) = squared_distance(x.row(i).data(), y.row(j).data(), d);
  }
  const Eigen::MatrixXd cost_yx = cost_xy.transpose();
  const double max_cost = cost_xy.maxCoeff();
  if (max_cost <= 0.0) return 0.0;

  std::vector<double> flat(cost_xy.data(), cost_xy.data() + cost_xy.size());
  auto mid = flat.begin() + static_cast<std::ptrdiff_t>(flat.size() / 2);
  std::nth_element(flat.begin(), mid, flat.end());
  double reg = config.reg_factor * *mid;
  if (reg <= 0.0) reg = config.reg_factor * cost_xy.mean();

  std::vector<double> schedule;
  for (double eps = max_cost; eps > reg; eps *= 0.5) schedule.push_back(eps);
  schedule.push_back(reg);

  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const double eps = schedule[s];
    const bool last = s + 1 == schedule.size();
    const double tol = last ? config.tolerance : std::max(config.tolerance, 1e-3);
    const std::size_t max_iter = last ? config.max_iterations : 100;
    for (std::size_t it = 0; it < max_iter; ++it) {
      const double violation = sinkhorn_update(cost_xy, g, eps, log_a, f);
      sinkhorn_update(cost_yx, f, eps, log_b, g);
      if (it > 0 && violation < tol) break;

    }
  }

  const double eps = schedule.back();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double c = cost_xy(j, i);
      total += std::exp((f(i) + g(j) - c) / eps) * c;
    }
  }
  return total;
}

double wasserstein2(const Matrix& x, const Matrix& y, const SinkhornConfig& config, SeededRng rng) {
  if (config.repetitions == 0) throw std::invalid_argument("wasserstein2: need one repetition");
  const auto cap = static_cast<Eigen::Index>(config.max_samples);
  if (x.rows() <= cap && y.rows() <= cap) return sinkhorn_cost(x, y, config);
  double total = 0.0;
  for (std::size_t r = 0; r < config.repetitions; ++r) {
    auto local = rng.derive(r);
    const Matrix xs = subsample(x, config.max_samples, local);
    const Matrix ys = subsample(y, config.max_samples, local);
    total += sinkhorn_cost(xs, ys, config);
  }
  return total / static_cast<double>(config.repetitions);
}

std::size_t cross_edge_count(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw std::invalid_argument("cross_edge_count: width mismatch");
  const auto nx = static_cast<std::size_t>(x.rows());
  const std::size_t n = nx + static_cast<std::size_t>(y.rows());
  const Eigen::Index d = x.cols();
  auto row = [&](std::size_t i) {
    return i < nx ? x.row(static_cast<Eigen::Index>(i)).data()
                  : y.row(static_cast<Eigen::Index>(i - nx)).data();
  };
  std::vector<double> key(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, 0);
  std::vector<char> in_tree(n, 0);
  std::size_t cross = 0;
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    const double* c = row(current);
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double dist = squared_distance(c, row(v), d);
      if (dist < key[v]) {
        key[v] = dist;
        parent[v] = current;
      }
      if (next == n || key[v] < key[next]) next = v;
    }
    in_tree[next] = 1;
    if ((parent[next] < nx) != (next < nx)) ++cross;
    current = next;
  }
  return cross;
}

double henze_penrose(const Matrix& x, const Matrix& y) {
  if (x.rows() < 2 || y.rows() < 2) throw std::invalid_argument("henze_penrose: need 2 rows per sample");
  const auto nx = static_cast<double>(x.rows());
  const auto ny = static_cast<double>(y.rows());
  const auto r = static_cast<double>(cross_edge_count(x, y));
  return std::clamp(1.0 - r * (nx + ny) / (2.0 * nx * ny), 0.0, 1.0);
}

double knn_kl(const Matrix& x, const Matrix& y, std::size_t k) {
  if (x.cols() != y.cols()) throw std::invalid_argument("knn_kl: width mismatch");
  const auto nx = static_cast<std::size_t>(x.rows());
  const auto ny = static_cast<std::size_t>(y.rows());
  if (k == 0 || nx <= k || ny < k) throw std::invalid_argument("knn_kl: too few rows for k");
  const Eigen::Index d = x.cols();
  std::vector<double> terms(nx);
  parallel_for(nx, [&](std::size_t i) {
    const double* xi = x.row(static_cast<Eigen::Index>(i)).data();
    std::vector<double> within, across(ny);
    within.reserve(nx - 1);
    for (std::size_t j = 0; j < nx; ++j) {
      if (j != i) within.push_back(squared_distance(xi, x.row(static_cast<Eigen::Index>(j)).data(), d));
    }
    for (std::size_t j = 0; j < ny; ++j) across[j] = squared_distance(xi, y.row(static_cast<Eigen::Index>(j)).data(), d);
    std::nth_element(within.begin(), within.begin() + static_cast<std::ptrdiff_t>(k - 1), within.end());
    std::nth_element(across.begin(), across.begin() + static_cast<std::ptrdiff_t>(k - 1), across.end());
    const double rho = std::max(std::sqrt(within[k - 1]), kDistanceFloor);
    const double nu = std::max(std::sqrt(across[k - 1]), kDistanceFloor);
    terms[i] = std::log(nu / rho);
  });
  const double sum = std::accumulate(terms.begin(), terms.end(), 0.0);
  return static_cast<double>(d) / static_cast<double>(nx) * sum +
         std::log(static_cast<double>(ny) / static_cast<double>(nx - 1));
}

double symmetric_kl(const Matrix& x, const Matrix& y, std::size_t k) {
  return knn_kl(x, y, k) + knn_kl(y, x, k);
}

DivergenceScores correction_divergences(const Matrix& x, const Matrix& y,
                                        const MetricsConfig& config, SeededRng rng) {
  DivergenceScores s;
  s.w2 = wasserstein2(x, y, config.sinkhorn, rng);
  s.henze_penrose = henze_penrose(x, y);
  s.symmetric_kl = symmetric_kl(x, y, config.kl_neighbors);
  return s;
}

CorrectionScore background_adjusted(const DivergenceScores& raw, const DivergenceScores& background) {
  CorrectionScore out;
  out.raw = raw;
  out.background = background;
  out.adjusted.w2 = raw.w2 - background.w2;
  out.adjusted.henze_penrose = raw.henze_penrose - background.henze_penrose;
  out.adjusted.symmetric_kl = raw.symmetric_kl - background.symmetric_kl;
  return out;
}

}  // namespace datafix
