#pragma once

#include <cstddef>
#include <span>

#include "datafix/dataset.hpp"
#include "datafix/rng.hpp"

namespace datafix {

struct LocalizationScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Set precision/recall/F-1 of predicted against true shifted columns.
/// Two empty sets score 1; any other empty side scores 0.
LocalizationScore f1_localization(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth);
LocalizationScore f1_localization(const CorruptionMask& predicted, const CorruptionMask& truth);

struct SinkhornConfig {
  std::size_t max_samples = 512;
  std::size_t repetitions = 5;
  /// Final entropic regularization as a fraction of the median cost.
  double reg_factor = 0.01;
  double tolerance = 1e-6;
  /// The tolerance is seldom reached at the final regularization; the
  /// transport cost is stable to ~1e-4 well before this cap.
  std::size_t max_iterations = 1000;
};

/// Transport cost <P, C> of the entropic plan between the uniform
/// measures on X and Y under squared Euclidean cost. Solved in the log
/// domain with epsilon scaling down to reg_factor * median(C).
double sinkhorn_cost(const Matrix& x, const Matrix& y, const SinkhornConfig& config);

/// Mean sinkhorn_cost over random subsamples of at most max_samples rows.
double wasserstein2(const Matrix& x, const Matrix& y, const SinkhornConfig& config, SeededRng rng);

/// Friedman-Rafsky statistic on the Euclidean minimum spanning tree of the
/// pooled rows: 1 - R (Nx + Ny) / (2 Nx Ny), clipped to [0, 1], where R
/// counts edges joining X and Y.
double henze_penrose(const Matrix& x, const Matrix& y);

/// Number of cross-sample MST edges (dense Prim, ties to the lower index).
std::size_t cross_edge_count(const Matrix& x, const Matrix& y);

/// k-NN estimate of KL(p || q) from samples of p (x) and q (y).
double knn_kl(const Matrix& x, const Matrix& y, std::size_t k = 1);

/// knn_kl(x, y) + knn_kl(y, x).
double symmetric_kl(const Matrix& x, const Matrix& y, std::size_t k = 1);

struct DivergenceScores {
  double w2 = 0.0;
  double henze_penrose = 0.0;
  double symmetric_kl = 0.0;
};

struct MetricsConfig {
  SinkhornConfig sinkhorn;
  std::size_t kl_neighbors = 1;
};

DivergenceScores correction_divergences(const Matrix& x, const Matrix& y,
                                        const MetricsConfig& config, SeededRng rng);

struct CorrectionScore {
  DivergenceScores raw;
  DivergenceScores background;
  /// raw - background, not clipped.
  DivergenceScores adjusted;
};

CorrectionScore background_adjusted(const DivergenceScores& raw, const DivergenceScores& background);

}  // namespace datafix
