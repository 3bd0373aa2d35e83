#include "datafix/manipulations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "datafix/imputers.hpp"

namespace datafix {

ManipulationSpec parse_manipulation(const std::string& code) {
  ManipulationSpec spec;
  static const struct {
    const char* code;
    ManipulationType type;
    double alpha;
    double rho;
  } kTable[] = {
      {"1", ManipulationType::kUniform, 0, 0},
      {"2", ManipulationType::kFlip, 0, 0},
      {"3", ManipulationType::kPermuteColumns, 0, 0},
      {"4", ManipulationType::kAdditiveNoise, 0, 0},
      {"4.1", ManipulationType::kAdditiveNoise, 0.02, 0},
      {"4.2", ManipulationType::kAdditiveNoise, 0.05, 0},
      {"4.3", ManipulationType::kAdditiveNoise, 0.1, 0},
      {"5", ManipulationType::kRound, 0, 0},
      {"6", ManipulationType::kBitFlip, 0, 0},
      {"6.1", ManipulationType::kBitFlip, 0, 0.2},
      {"6.2", ManipulationType::kBitFlip, 0, 0.4},
      {"6.3", ManipulationType::kBitFlip, 0, 0.6},
      {"7", ManipulationType::kMlp, 0, 0},
      {"8", ManipulationType::kPermuteBlock, 0, 0},
      {"9", ManipulationType::kKnnRegression, 0, 0},
      {"10", ManipulationType::kKnnClassification, 0, 0},
  };
  for (const auto& row : kTable) {
    if (code == row.code) {
      spec.type = row.type;
      if (row.alpha > 0) spec.alpha = row.alpha;
      if (row.rho > 0) spec.rho = row.rho;
      return spec;
    }
  }
  throw std::invalid_argument("unknown manipulation type '" + code + "'");
}

bool is_eligible(ManipulationType type, FeatureKind kind) {
  const bool cat = kind == FeatureKind::kCategorical;
  switch (type) {
    case ManipulationType::kUniform:
    case ManipulationType::kAdditiveNoise:
    case ManipulationType::kRound:
    case ManipulationType::kKnnRegression:
      return !cat;
    case ManipulationType::kBitFlip:
    case ManipulationType::kKnnClassification:
      return cat;
    case ManipulationType::kFlip:
    case ManipulationType::kPermuteColumns:
    case ManipulationType::kMlp:
    case ManipulationType::kPermuteBlock:
      return true;
  }
  return false;
}

std::size_t manipulated_column_count(double fraction, std::size_t eligible) {
  const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(eligible) + 0.5));
  return std::min(eligible, std::max<std::size_t>(1, n));
}

ManipulationResult apply_manipulation(const Dataset& query, const ManipulationSpec& spec,
                                      SeededRng rng, const std::optional<Dataset>& reference) {
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
    throw std::invalid_argument("apply_manipulation: fraction must be in (0, 1]");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t c = 0; c < query.cols(); ++c) {
    if (is_eligible(spec.type, query.kind(c))) eligible.push_back(c);
  }
  if (eligible.empty()) {
    throw std::invalid_argument("apply_manipulation: no columns of a compatible kind");
  }
  auto picker = rng.derive(0);
  picker.shuffle(eligible);
  eligible.resize(manipulated_column_count(spec.fraction, eligible.size()));
  std::sort(eligible.begin(), eligible.end());
  CorruptionMask mask(eligible, query.cols(), false);

  const auto n = static_cast<Eigen::Index>(query.rows());
  Matrix out = query.values();
  auto column_rng = [&](std::size_t c) { return rng.derive(100 + c); };

  switch (spec.type) {
    case ManipulationType::kUniform:
      for (auto c : mask) {
        auto r = column_rng(c);
        for (Eigen::Index i = 0; i < n; ++i) out(i, static_cast<Eigen::Index>(c)) = r.uniform();
      }
      break;
    case ManipulationType::kFlip:
      for (auto c : mask) out.col(static_cast<Eigen::Index>(c)).array() = 1.0 - out.col(static_cast<Eigen::Index>(c)).array();
      break;
    case ManipulationType::kPermuteColumns:
      for (auto c : mask) {
        const auto perm = column_rng(c).permutation(query.rows());
        const auto cc = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) out(i, cc) = query.values()(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), cc);
      }
      break;
    case ManipulationType::kAdditiveNoise:
      for (auto c : mask) {
        auto r = column_rng(c);
        const auto cc = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) out(i, cc) = std::clamp(out(i, cc) + spec.alpha * r.sign(), 0.0, 1.0);
      }
      break;
    case ManipulationType::kRound:
      for (auto c : mask) {
        const auto cc = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) out(i, cc) = std::floor(out(i, cc) + 0.5);
      }
      break;
    case ManipulationType::kBitFlip:
      for (auto c : mask) {
        auto r = column_rng(c);
        const auto cc = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (r.bernoulli(spec.rho)) out(i, cc) = 1.0 - out(i, cc);
        }
      }
      break;
    case ManipulationType::kMlp: {
      const auto m = static_cast<Eigen::Index>(mask.size());
      auto wr = rng.derive(1);
      Eigen::MatrixXd w1(m, m), w2(m, m);
      for (auto& v : w1.reshaped()) v = wr.normal();
      for (auto& v : w2.reshaped()) v = wr.normal();
      Eigen::MatrixXd block(n, m);
      for (Eigen::Index j = 0; j < m; ++j) block.col(j) = out.col(static_cast<Eigen::Index>(mask.indices()[static_cast<std::size_t>(j)]));
      const Eigen::MatrixXd hidden = (block * w1).array().tanh().matrix();
      const Eigen::MatrixXd result = hidden * w2;
      for (Eigen::Index j = 0; j < m; ++j) {
        const std::size_t c = mask.indices()[static_cast<std::size_t>(j)];
        const double lo = result.col(j).minCoeff();
        const double span = result.col(j).maxCoeff() - lo;
        for (Eigen::Index i = 0; i < n; ++i) {
          double v = span > 0.0 ? (result(i, j) - lo) / span : 0.0;
          if (query.is_categorical(c)) v = std::floor(v + 0.5);
          out(i, static_cast<Eigen::Index>(c)) = v;
        }
      }
      break;
    }
    case ManipulationType::kPermuteBlock: {
      const auto perm = rng.derive(2).permutation(query.rows());
      for (auto c : mask) {
        const auto cc = static_cast<Eigen::Index>(c);
        for (Eigen::Index i = 0; i < n; ++i) out(i, cc) = query.values()(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), cc);
      }
      break;
    }
    case ManipulationType::kKnnRegression:
    case ManipulationType::kKnnClassification: {
      if (!reference) {
        throw std::invalid_argument("apply_manipulation: KNN types need a reference dataset");
      }
      if (mask.size() >= query.cols()) {
        throw std::invalid_argument("apply_manipulation: KNN types need an unmasked column");
      }
      const auto k = std::min(spec.knn_k, reference->rows());
      out = knn_impute(*reference, query, mask, k).values.values();
      break;
    }
  }
  return {query.with_values(std::move(out)), std::move(mask)};
}

}  // namespace datafix
