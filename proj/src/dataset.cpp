#include "datafix/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace datafix {

const char* to_string(FeatureKind kind) {
  return kind == FeatureKind::kCategorical ? "cat" : "cont";
}

FeatureKind parse_feature_kind(const std::string& tag) {
  if (tag == "cont" || tag == "continuous") return FeatureKind::kContinuous;
  if (tag == "cat" || tag == "categorical") return FeatureKind::kCategorical;
  throw std::invalid_argument("unknown feature kind '" + tag + "'");
}

Dataset::Dataset(Matrix values, std::vector<FeatureKind> kinds, std::vector<std::string> names)
    : values_(std::move(values)), kinds_(std::move(kinds)), names_(std::move(names)) {
  const auto d = cols();
  if (kinds_.size() != d) throw std::invalid_argument("kinds length does not match column count");
  if (names_.size() != d) throw std::invalid_argument("names length does not match column count");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite value at row " + std::to_string(i) + ", column " +
                                    std::to_string(j));
      }
      if (kinds_[j] == FeatureKind::kCategorical && v != std::floor(v)) {
        throw std::invalid_argument("categorical column " + names_[j] +
                                    " holds a non-integer value");
      }
    }
  }
}

Dataset Dataset::continuous(Matrix values) {
  const auto d = static_cast<std::size_t>(values.cols());
  std::vector<std::string> names(d);
  for (std::size_t j = 0; j < d; ++j) names[j] = "f" + std::to_string(j);
  return Dataset(std::move(values), std::vector<FeatureKind>(d, FeatureKind::kContinuous),
                 std::move(names));
}

Dataset Dataset::with_values(Matrix values) const {
  if (static_cast<std::size_t>(values.cols()) != cols()) {
    throw std::invalid_argument("with_values: column count changed");
  }
  return Dataset(std::move(values), kinds_, names_);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= this->rows()) throw std::out_of_range("select_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
  }
  Dataset ds;
  ds.values_ = std::move(out);
  ds.kinds_ = kinds_;
  ds.names_ = names_;
  return ds;
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
  Matrix out(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  std::vector<FeatureKind> kinds;
  std::vector<std::string> names;
  kinds.reserve(cols.size());
  names.reserve(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= this->cols()) throw std::out_of_range("select_columns: column out of range");
    out.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(cols[j]));
    kinds.push_back(kinds_[cols[j]]);
    names.push_back(names_[cols[j]]);
  }
  Dataset ds;
  ds.values_ = std::move(out);
  ds.kinds_ = std::move(kinds);
  ds.names_ = std::move(names);
  return ds;
}

bool Dataset::same_schema(const Dataset& other) const {
  return cols() == other.cols() && kinds_ == other.kinds_;
}

CorruptionMask::CorruptionMask(std::vector<std::size_t> indices, std::size_t n_features,
                               bool require_proper)
    : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw std::invalid_argument("corruption mask contains duplicate indices");
  }
  if (!indices_.empty() && indices_.back() >= n_features) {
    throw std::invalid_argument("corruption mask index " + std::to_string(indices_.back()) +
                                " out of range for " + std::to_string(n_features) + " features");
  }
  if (require_proper && indices_.size() >= n_features && n_features > 0) {
    throw std::invalid_argument("corruption mask must leave at least one column uncorrupted");
  }
}

bool CorruptionMask::contains(std::size_t col) const {
  return std::binary_search(indices_.begin(), indices_.end(), col);
}

std::vector<std::size_t> CorruptionMask::complement(std::size_t n_features) const {
  std::vector<std::size_t> out;
  out.reserve(n_features - std::min(n_features, indices_.size()));
  std::size_t k = 0;
  for (std::size_t j = 0; j < n_features; ++j) {
    if (k < indices_.size() && indices_[k] == j) {
      ++k;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

std::pair<Dataset, NormalizationParams> normalize(const Dataset& ds) {
  if (ds.rows() == 0 || ds.cols() == 0) throw std::invalid_argument("normalize: empty dataset");
  NormalizationParams params;
  params.ranges.resize(ds.cols());
  const auto& v = ds.values();
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto col = v.col(static_cast<Eigen::Index>(j));
    params.ranges[j] = {col.minCoeff(), col.maxCoeff()};
  }
  return {apply_normalization(ds, params), params};
}

Dataset apply_normalization(const Dataset& ds, const NormalizationParams& params) {
  if (params.ranges.size() != ds.cols()) {
    throw std::invalid_argument("normalization parameters do not match column count");
  }
  Matrix out = ds.values();
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto [lo, hi] = params.ranges[j];
    auto col = out.col(static_cast<Eigen::Index>(j));
    if (hi > lo) {
      col = (col.array() - lo) / (hi - lo);
    } else {
      col.setZero();
    }
  }
  // Categorical codes other than {0, 1} stop being integers once scaled.
  std::vector<FeatureKind> kinds = ds.kinds();
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    if (kinds[j] != FeatureKind::kCategorical) continue;
    const auto col = out.col(static_cast<Eigen::Index>(j)).array();
    if ((col != col.floor()).any()) kinds[j] = FeatureKind::kContinuous;
  }
  return Dataset(std::move(out), std::move(kinds), ds.names());
}

Dataset denormalize(const Dataset& ds, const NormalizationParams& params) {
  if (params.ranges.size() != ds.cols()) {
    throw std::invalid_argument("normalization parameters do not match column count");
  }
  Matrix out = ds.values();
  for (std::size_t j = 0; j < ds.cols(); ++j) {
    const auto [lo, hi] = params.ranges[j];
    auto col = out.col(static_cast<Eigen::Index>(j));
    if (hi > lo) {
      col = col.array() * (hi - lo) + lo;
    } else {
      col.setConstant(lo);
    }
  }
  return ds.with_values(std::move(out));
}

std::pair<Dataset, Dataset> split_reference_query(const Dataset& ds, SeededRng rng) {
  const std::size_t n = ds.rows();
  if (n < 2) throw std::invalid_argument("split_reference_query: need at least 2 rows");
  auto perm = rng.permutation(n);
  const std::size_t half = n / 2;
  std::vector<std::size_t> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> second(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {ds.select_rows(first), ds.select_rows(second)};
}

std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, SeededRng rng) {
  if (k < 2) throw std::invalid_argument("kfold_indices: need k >= 2");
  if (n < k) throw std::invalid_argument("kfold_indices: fewer samples than folds");
  const auto perm = rng.permutation(n);
  std::vector<std::size_t> fold_of(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[perm[pos++]] = f;
  }
  std::vector<Fold> folds(k);
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (std::size_t f = 0; f < k; ++f) {
      (fold_of[idx] == f ? folds[f].test : folds[f].train).push_back(idx);
    }
  }
  return folds;
}

}  // namespace datafix
