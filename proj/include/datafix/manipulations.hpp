#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "datafix/dataset.hpp"
#include "datafix/rng.hpp"

namespace datafix {

enum class ManipulationType {
  kUniform = 1,       ///< 1: U(0, 1)
  kFlip,              ///< 2: 1 - x
  kPermuteColumns,    ///< 3: independent row permutation per column
  kAdditiveNoise,     ///< 4.x: clamp(x + alpha * sign)
  kRound,             ///< 5: round to {0, 1}
  kBitFlip,           ///< 6.x: negate with probability rho
  kMlp,               ///< 7: random MLP on the masked block
  kPermuteBlock,      ///< 8: one shared row permutation of the masked block
  kKnnRegression,     ///< 9: KNN regressor from the unmasked columns
  kKnnClassification  ///< 10: KNN classifier from the unmasked columns
};

struct ManipulationSpec {
  ManipulationType type = ManipulationType::kUniform;
  /// Share of the eligible columns to corrupt.
  double fraction = 0.1;
  /// Noise amplitude for type 4.
  double alpha = 0.05;
  /// Flip probability for type 6.
  double rho = 0.2;
  /// Neighbours for types 9 and 10.
  std::size_t knn_k = 10;
};

/// Parses "1", "2", "3", "4.1"-"4.3", "5", "6.1"-"6.3", "7", "8", "9", "10".
/// Sub-variants set alpha (0.02, 0.05, 0.1) or rho (0.2, 0.4, 0.6); a bare
/// "4" or "6" keeps the default alpha / rho.
ManipulationSpec parse_manipulation(const std::string& code);

/// Whether the type can be applied to columns of this kind.
bool is_eligible(ManipulationType type, FeatureKind kind);

/// max(1, round_half_up(fraction * eligible)).
std::size_t manipulated_column_count(double fraction, std::size_t eligible);

struct ManipulationResult {
  Dataset data;
  CorruptionMask mask;
};

/// Corrupts a uniformly drawn subset of the eligible columns of `query`.
/// Types 9 and 10 train on `reference`, which must then be provided.
ManipulationResult apply_manipulation(const Dataset& query, const ManipulationSpec& spec,
                                      SeededRng rng,
                                      const std::optional<Dataset>& reference = std::nullopt);

}  // namespace datafix
