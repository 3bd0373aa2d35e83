#pragma once

#include <cstddef>
#include <string>

#include "datafix/dataset.hpp"
#include "datafix/rng.hpp"

namespace datafix {

enum class ImputeMethod { kKnn, kLinReg, kRandomSample };

/// "knn", "linreg" or "random".
std::string to_string(ImputeMethod method);

/// A corrected query: masked columns rewritten, all others copied as is.
struct ImputedCandidate {
  Dataset values;
  ImputeMethod method = ImputeMethod::kKnn;
};

/// Nearest reference rows in L2 over the unmasked columns. Masked
/// continuous columns get the neighbours' mean, categorical columns their
/// majority value (ties to the smallest value).
ImputedCandidate knn_impute(const Dataset& reference, const Dataset& query,
                            const CorruptionMask& mask, std::size_t k = 10);

/// Multi-output least squares (with intercept) from the unmasked to the
/// masked reference columns. Continuous outputs are clipped to the
/// reference range, categorical outputs snapped to the nearest observed
/// category.
ImputedCandidate linreg_impute(const Dataset& reference, const Dataset& query,
                               const CorruptionMask& mask);

/// Copies the whole masked block of one uniformly drawn reference row into
/// each query row.
ImputedCandidate random_sample_impute(const Dataset& reference, const Dataset& query,
                                      const CorruptionMask& mask, SeededRng rng);

}  // namespace datafix
