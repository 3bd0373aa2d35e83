#include "datafix/divergence.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace datafix {
namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

std::vector<double> Discriminator::predict_proba(const Matrix& rows) const {
  if (const auto* f = forest()) return f->predict_proba(rows);
  if (const auto* b = boosted()) return b->predict_proba(rows);
  throw std::logic_error("predict_proba on an untrained discriminator");
}

double Discriminator::predict_proba_row(const double* row) const {
  if (const auto* f = forest()) return f->predict_proba_row(row);
  if (const auto* b = boosted()) return b->predict_proba_row(row);
  throw std::logic_error("predict_proba on an untrained discriminator");
}

std::vector<double> Discriminator::likelihood_ratio(const Matrix& rows) const {
  return datafix::likelihood_ratio(predict_proba(rows));
}

Discriminator fit_discriminator(const Matrix& reference, const Matrix& query,
                                const DiscriminatorConfig& config, SeededRng rng) {
  if (config.kind == ModelKind::kForest) {
    return Discriminator(fit_forest(reference, query, config.forest, rng));
  }
  return Discriminator(fit_boosted(reference, query, config.boosted, rng));
}

double sign_term(double r) { return r > 1.0 ? 0.5 : -0.5; }

double tv_from_ratios(std::span<const double> reference_ratios,
                      std::span<const double> query_ratios) {
  if (reference_ratios.empty() || query_ratios.empty()) {
    throw std::invalid_argument("tv_from_ratios: empty sample");
  }
  double ref = 0.0, qry = 0.0;
  for (double r : reference_ratios) ref += sign_term(r);
  for (double r : query_ratios) qry += sign_term(r);
  return ref / static_cast<double>(reference_ratios.size()) -
         qry / static_cast<double>(query_ratios.size());
}

double balanced_accuracy_from_ratios(std::span<const double> reference_ratios,
                                     std::span<const double> query_ratios) {
  if (reference_ratios.empty() || query_ratios.empty()) {
    throw std::invalid_argument("balanced_accuracy_from_ratios: empty sample");
  }
  const auto ref_hits = std::count_if(reference_ratios.begin(), reference_ratios.end(),
                                      [](double r) { return r > 1.0; });
  const auto qry_hits = std::count_if(query_ratios.begin(), query_ratios.end(),
                                      [](double r) { return r <= 1.0; });
  return 0.5 * (static_cast<double>(ref_hits) / static_cast<double>(reference_ratios.size()) +
                static_cast<double>(qry_hits) / static_cast<double>(query_ratios.size()));
}

double DivergenceEstimate::policy_value() const { return std::clamp(mean, 0.0, 1.0); }

DivergenceEstimate estimate_tv(const Matrix& reference, const Matrix& query,
                               const DiscriminatorConfig& config, std::size_t folds,
                               SeededRng rng) {
  if (reference.cols() != query.cols()) {
    throw std::invalid_argument("estimate_tv: reference and query widths differ");
  }
  const auto nx = static_cast<std::size_t>(reference.rows());
  const auto ny = static_cast<std::size_t>(query.rows());
  if (nx < folds || ny < folds) {
    throw std::invalid_argument("estimate_tv: fewer rows than folds");
  }
  const auto ref_folds = kfold_indices(nx, folds, rng.derive(0));
  const auto qry_folds = kfold_indices(ny, folds, rng.derive(1));

  DivergenceEstimate est;
  est.per_fold.resize(folds);
  est.balanced_accuracy_per_fold.resize(folds);
  est.reference_proba.assign(nx, 0.5);
  est.query_proba.assign(ny, 0.5);
  const auto d = static_cast<std::size_t>(reference.cols());
  if (config.kind == ModelKind::kForest) est.importances.assign(d, 0.0);

  for (std::size_t f = 0; f < folds; ++f) {
    const auto model =
        fit_discriminator(gather_rows(reference, ref_folds[f].train),
                          gather_rows(query, qry_folds[f].train), config, rng.derive(2 + f));
    const auto ref_p = model.predict_proba(gather_rows(reference, ref_folds[f].test));
    const auto qry_p = model.predict_proba(gather_rows(query, qry_folds[f].test));
    for (std::size_t i = 0; i < ref_p.size(); ++i) est.reference_proba[ref_folds[f].test[i]] = ref_p[i];
    for (std::size_t i = 0; i < qry_p.size(); ++i) est.query_proba[qry_folds[f].test[i]] = qry_p[i];
    const auto ref_r = likelihood_ratio(ref_p);
    const auto qry_r = likelihood_ratio(qry_p);
    est.per_fold[f] = tv_from_ratios(ref_r, qry_r);
    est.balanced_accuracy_per_fold[f] = balanced_accuracy_from_ratios(ref_r, qry_r);
    if (const auto* forest = model.forest()) {
      for (std::size_t j = 0; j < d; ++j) est.importances[j] += forest->importances()[j];
    }
  }
  est.mean = std::accumulate(est.per_fold.begin(), est.per_fold.end(), 0.0) /
             static_cast<double>(folds);
  if (!est.importances.empty()) {
    const double total = std::accumulate(est.importances.begin(), est.importances.end(), 0.0);
    if (total > 0.0) {
      for (auto& v : est.importances) v /= total;
    }
  }
  return est;
}

}  // namespace datafix
