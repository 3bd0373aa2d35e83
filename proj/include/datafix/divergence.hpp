#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "datafix/dataset.hpp"
#include "datafix/discriminators.hpp"
#include "datafix/rng.hpp"

namespace datafix {

enum class ModelKind { kForest, kBoosted };

struct DiscriminatorConfig {
  ModelKind kind = ModelKind::kForest;
  ForestParams forest;
  BoostedParams boosted;
};

/// A trained reference (class 0) vs query (class 1) classifier.
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(ForestModel m) : model_(std::move(m)) {}
  explicit Discriminator(BoostedModel m) : model_(std::move(m)) {}

  /// P(query) per row.
  std::vector<double> predict_proba(const Matrix& rows) const;
  double predict_proba_row(const double* row) const;
  /// Reference-vs-query likelihood ratio per row (> 1 looks like reference).
  std::vector<double> likelihood_ratio(const Matrix& rows) const;

  const ForestModel* forest() const { return std::get_if<ForestModel>(&model_); }
  const BoostedModel* boosted() const { return std::get_if<BoostedModel>(&model_); }

 private:
  std::variant<std::monostate, ForestModel, BoostedModel> model_;
};

Discriminator fit_discriminator(const Matrix& reference, const Matrix& query,
                                const DiscriminatorConfig& config, SeededRng rng);

/// Total-variation term of the variational estimator: +1/2 when the ratio
/// says "reference" (r > 1), -1/2 otherwise. A ratio of exactly 1 counts as
/// query.
double sign_term(double r);

/// Empirical TV from held-out ratios:
/// mean_x sign_term(r(x)) - mean_y sign_term(r(y)).
double tv_from_ratios(std::span<const double> reference_ratios,
                      std::span<const double> query_ratios);

/// Mean of the reference hit rate (r > 1) and the query hit rate (r <= 1).
double balanced_accuracy_from_ratios(std::span<const double> reference_ratios,
                                     std::span<const double> query_ratios);

struct DivergenceEstimate {
  std::vector<double> per_fold;
  std::vector<double> balanced_accuracy_per_fold;
  /// Arithmetic mean of per_fold; may be slightly negative.
  double mean = 0.0;
  /// Mean forest importances across folds, renormalized (forest only).
  std::vector<double> importances;
  /// Out-of-fold P(query) for every reference and query row.
  std::vector<double> reference_proba;
  std::vector<double> query_proba;

  /// mean clamped to [0, 1].
  double policy_value() const;
};

/// k-fold estimate of the total variation distance between the rows of
/// `reference` and `query`. Each fold trains a discriminator on the other
/// k-1 folds of both datasets and evaluates on its own held-out rows.
DivergenceEstimate estimate_tv(const Matrix& reference, const Matrix& query,
                               const DiscriminatorConfig& config, std::size_t folds,
                               SeededRng rng);

}  // namespace datafix
