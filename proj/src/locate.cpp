#include "datafix/locate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace datafix {

std::vector<std::size_t> feature_removal_policy(std::span<const double> beta, double d_hat,
                                                double tau) {
  if (beta.empty()) throw std::invalid_argument("feature_removal_policy: empty importances");
  if (!(tau > 0.0)) throw std::invalid_argument("feature_removal_policy: tau must be positive");
  const std::size_t d = beta.size();
  double total = 0.0;
  for (double b : beta) total += std::abs(b);
  if (total <= 0.0) return {};

  std::vector<double> share(d);
  for (std::size_t j = 0; j < d; ++j) share[j] = std::abs(beta[j]) / total;
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return share[a] > share[b]; });

  const double target = tau * std::clamp(d_hat, 0.0, 1.0);
  const double floor_share = 1.0 / static_cast<double>(d);
  std::vector<std::size_t> selected;
  double cumulative = 0.0;
  for (std::size_t rank = 0; rank < d; ++rank) {
    const std::size_t j = order[rank];
    cumulative += share[j];
    if (share[j] > floor_share) selected.push_back(j);
    if (cumulative >= target) break;
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

LocateReport locate(const Dataset& reference, const Dataset& query, const LocateConfig& config,
                    SeededRng rng) {
  if (!reference.same_schema(query)) {
    throw std::invalid_argument("locate: reference and query schemas differ");
  }
  const std::size_t d = reference.cols();
  if (d < 2) throw std::invalid_argument("locate: need at least 2 columns");
  if (reference.rows() < config.folds || query.rows() < config.folds) {
    throw std::invalid_argument("locate: too few rows for the requested folds");
  }

  DiscriminatorConfig disc;
  disc.kind = ModelKind::kForest;
  disc.forest = config.forest;

  const double max_removed = config.max_removed_fraction * static_cast<double>(d);
  std::vector<std::size_t> active(d);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::size_t removed_total = 0;

  LocateReport report;
  for (std::size_t it = 0;; ++it) {
    const Matrix ref = reference.select_columns(active).values();
    const Matrix qry = query.select_columns(active).values();
    const auto est = estimate_tv(ref, qry, disc, config.folds, rng.derive(it));

    LocateIteration rec;
    rec.removed_before = removed_total;
    rec.d_hat = est.policy_value();
    rec.d_hat_raw = est.mean;
    rec.per_fold = est.per_fold;

    const bool converged = rec.d_hat <= config.epsilon;
    const bool budget_spent = static_cast<double>(removed_total) >= max_removed;
    if (!converged && !budget_spent) {
      for (auto local : feature_removal_policy(est.importances, rec.d_hat, config.tau)) {
        rec.removed.push_back(active[local]);
      }
    }
    const bool stop = rec.removed.empty();
    report.iterations.push_back(rec);
    if (stop) break;

    removed_total += rec.removed.size();
    std::vector<std::size_t> next;
    next.reserve(active.size() - rec.removed.size());
    std::set_difference(active.begin(), active.end(), rec.removed.begin(), rec.removed.end(),
                        std::back_inserter(next));
    active = std::move(next);
  }

  std::vector<std::size_t> raw;
  for (const auto& rec : report.iterations) raw.insert(raw.end(), rec.removed.begin(), rec.removed.end());
  report.raw_mask = CorruptionMask(raw, d);

  if (config.refine) {
    auto refined = refine(report.iterations, config);
    report.refined_mask = CorruptionMask(std::move(refined.mask), d);
    report.kept_iterations = refined.kept_iterations;
    report.curve = std::move(refined.curve);
  } else {
    report.refined_mask = report.raw_mask;
    report.kept_iterations = report.iterations.size();
  }
  return report;
}

}  // namespace datafix
