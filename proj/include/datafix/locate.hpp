#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "datafix/dataset.hpp"
#include "datafix/divergence.hpp"
#include "datafix/rng.hpp"

namespace datafix {

struct LocateConfig {
  /// Share of tau * D that the selected importances must cover per iteration.
  double tau = 0.1;
  /// Iteration stops once the estimated divergence is at or below this.
  double epsilon = 0.02;
  std::size_t folds = 5;
  ForestParams forest;
  /// Stop once this fraction of the original columns has been removed.
  double max_removed_fraction = 0.5;

  // Refinement.
  bool refine = true;
  double zeta = 2.0;
  int polyorder = 4;
  double sensitivity = 5.0;
};

/// One evaluated state of the removal loop.
struct LocateIteration {
  /// Columns removed before this state was evaluated.
  std::size_t removed_before = 0;
  /// Divergence estimate clamped to [0, 1].
  double d_hat = 0.0;
  /// Unclamped fold mean.
  double d_hat_raw = 0.0;
  std::vector<double> per_fold;
  /// Columns (original indices) selected for removal at this state; empty
  /// for the state that ended the loop.
  std::vector<std::size_t> removed;
};

/// Divergence-vs-removed-features curve and its processing stages.
struct RefinementCurve {
  std::vector<double> x;          ///< 0 .. total removed
  std::vector<double> raw;        ///< piecewise-linear through the states
  std::vector<double> smoothed;   ///< after Savitzky-Golay
  std::vector<double> processed;  ///< after opening + running minimum
  std::size_t window = 0;
  std::size_t knee_index = 0;     ///< index into x
};

struct RefineResult {
  std::vector<std::size_t> mask;
  /// Number of leading iterations whose removals are kept.
  std::size_t kept_iterations = 0;
  RefinementCurve curve;
};

struct LocateReport {
  std::vector<LocateIteration> iterations;
  CorruptionMask raw_mask;
  CorruptionMask refined_mask;
  std::size_t kept_iterations = 0;
  RefinementCurve curve;

  double initial_d_hat() const { return iterations.empty() ? 0.0 : iterations.front().d_hat; }
};

/// Feature removal policy. Normalizes |beta|, walks features by decreasing
/// score until the cumulative share reaches tau * d_hat, and keeps those
/// walked features whose share exceeds 1/d. Returns column indices into
/// beta, sorted ascending; empty when beta is all zero.
std::vector<std::size_t> feature_removal_policy(std::span<const double> beta, double d_hat,
                                                double tau);

/// Iterative localization of the shifted columns of `query` relative to
/// `reference`, followed by knee-based refinement.
LocateReport locate(const Dataset& reference, const Dataset& query, const LocateConfig& config,
                    SeededRng rng);

/// Least-squares local polynomial smoothing. Edge points are evaluated on
/// the polynomial fitted to the first/last full window. Curves shorter than
/// the window are padded by edge replication.
std::vector<double> savitzky_golay(std::span<const double> y, std::size_t window, int polyorder);

/// Size-3 grey opening of the edge-replicated curve followed by a running
/// minimum. The result is pointwise <= y and non-increasing.
std::vector<double> enforce_nonincreasing(std::span<const double> y);

/// Kneedle (offline) for a convex decreasing curve. Only difference-curve
/// maxima above zero are knee candidates. Returns the index of the knee,
/// the last index when no knee exists, and 0 for a flat curve.
std::size_t find_knee(std::span<const double> x, std::span<const double> y, double sensitivity);

/// Window rule: max(5, 2 * floor(zeta * delta / 2) + 1) where delta is the
/// mean number of columns removed per removing iteration.
std::size_t refinement_window(double zeta, double mean_removed_per_iteration);

RefineResult refine(const std::vector<LocateIteration>& iterations, const LocateConfig& config);

}  // namespace datafix
