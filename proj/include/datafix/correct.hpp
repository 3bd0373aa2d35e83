#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "datafix/dataset.hpp"
#include "datafix/divergence.hpp"
#include "datafix/imputers.hpp"
#include "datafix/rng.hpp"

namespace datafix {

struct CorrectConfig {
  /// Correction stops once the estimated divergence is below this.
  double epsilon = 0.1;
  std::size_t epochs = 2;
  std::size_t folds = 2;
  std::size_t knn_k = 10;
  /// Column-permuted copies of the reference block added to the pool.
  std::size_t n_perm = 1;
  /// Pool size cap (current query blocks are always kept).
  std::size_t max_pool = 50000;
  /// An epoch must lower the estimate by at least this much to continue.
  double min_improvement = 0.005;
  /// Add column-permuted reference rows to the query side when training.
  bool augment = true;
  BoostedParams boosted;
};

struct InitialSelection {
  ImputedCandidate candidate;
  DivergenceEstimate estimate;
  /// Estimated divergence of the KNN, LinReg and RandomSample candidates.
  std::array<double, 3> scores{};
  /// Kept for the proposal pool.
  ImputedCandidate linreg;
};

/// Imputes with all three baselines and keeps the one with the lowest
/// boosted-discriminator divergence estimate (ties in KNN, LinReg,
/// RandomSample order).
InitialSelection select_initial(const Dataset& reference, const Dataset& query,
                                const CorruptionMask& mask, const CorrectConfig& config,
                                SeededRng rng);

/// Rows with r < 1, most suspicious (smallest r) first, at most half of
/// the rows. Ties keep the lower index first.
std::vector<std::size_t> detect_incorrect(std::span<const double> ratios);

enum class ProposalSource { kReference, kLinReg, kPermutation, kCurrent };

/// Candidate values for the masked block, one row per candidate.
struct ProposalPool {
  Matrix blocks;
  std::vector<ProposalSource> sources;

  std::size_t size() const { return sources.size(); }
};

/// Reference blocks, LinReg blocks, `n_perm` column-permuted copies of the
/// reference blocks, then the current query blocks. When the pool would
/// exceed `max_pool`, the non-current part is uniformly subsampled (order
/// preserved).
ProposalPool build_pool(const Dataset& reference, const Dataset& linreg, const Dataset& current,
                        const CorruptionMask& mask, std::size_t n_perm, std::size_t max_pool,
                        SeededRng rng);

/// Index of the pool block that maximizes the model's reference ratio when
/// substituted into `row` at the masked positions; first index on ties.
std::size_t best_proposal(std::span<const double> row, const ProposalPool& pool,
                          const CorruptionMask& mask, const Discriminator& model);

/// best_proposal for many rows at once. Boosted models use a path-caching
/// evaluator; results equal the row-at-a-time ones.
std::vector<std::size_t> best_proposals(const Matrix& rows, const ProposalPool& pool,
                                        const CorruptionMask& mask, const Discriminator& model);

struct CorrectEpoch {
  double d_hat_before = 0.0;
  double d_hat_after = 0.0;
  /// Rows flagged as likely corrupted.
  std::size_t flagged = 0;
  /// Flagged rows whose block actually changed.
  std::size_t replaced = 0;
  /// The epoch made the estimate worse and was rolled back.
  bool reverted = false;
};

struct CorrectReport {
  Dataset corrected;
  ImputeMethod initial = ImputeMethod::kKnn;
  std::array<double, 3> initial_scores{};
  std::vector<CorrectEpoch> epochs;
  double final_d_hat = 0.0;
  bool converged = false;
};

CorrectReport correct(const Dataset& reference, const Dataset& query, const CorruptionMask& mask,
                      const CorrectConfig& config, SeededRng rng);

}  // namespace datafix
