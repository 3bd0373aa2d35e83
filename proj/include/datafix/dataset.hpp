#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "datafix/rng.hpp"

namespace datafix {

/// Row-major storage: discriminators and imputers walk samples row by row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureKind { kContinuous, kCategorical };

const char* to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& tag);

/// N x d table of reals with a kind and a name per column.
///
/// Construction validates shape, finiteness and that categorical columns
/// hold integer values. Instances are immutable; the transforming methods
/// return new datasets.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix values, std::vector<FeatureKind> kinds, std::vector<std::string> names);

  /// All columns continuous, named f0..f{d-1}.
  static Dataset continuous(Matrix values);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  bool empty() const { return values_.size() == 0; }

  const Matrix& values() const { return values_; }
  const std::vector<FeatureKind>& kinds() const { return kinds_; }
  const std::vector<std::string>& names() const { return names_; }
  FeatureKind kind(std::size_t col) const { return kinds_[col]; }
  bool is_categorical(std::size_t col) const { return kinds_[col] == FeatureKind::kCategorical; }

  /// Same column metadata, new values (validated).
  Dataset with_values(Matrix values) const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_columns(std::span<const std::size_t> cols) const;

  /// True when both datasets have the same column count and kinds.
  bool same_schema(const Dataset& other) const;

 private:
  Matrix values_;
  std::vector<FeatureKind> kinds_;
  std::vector<std::string> names_;
};

/// Strictly increasing column indices of the shifted features.
class CorruptionMask {
 public:
  CorruptionMask() = default;

  /// Sorts and validates. Throws on duplicates or indices >= n_features.
  /// When `require_proper` is set the mask must also leave at least one
  /// column uncorrupted.
  CorruptionMask(std::vector<std::size_t> indices, std::size_t n_features,
                 bool require_proper = true);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t col) const;
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  /// Columns of [0, n_features) not in the mask, increasing.
  std::vector<std::size_t> complement(std::size_t n_features) const;

  bool operator==(const CorruptionMask&) const = default;

 private:
  std::vector<std::size_t> indices_;
};

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
};

struct NormalizationParams {
  std::vector<ColumnRange> ranges;
};

/// Min-max scales every column to [0, 1]; constant columns map to 0.
std::pair<Dataset, NormalizationParams> normalize(const Dataset& ds);

/// Applies previously fitted ranges (values outside the fitted range fall
/// outside [0, 1]).
Dataset apply_normalization(const Dataset& ds, const NormalizationParams& params);

/// Inverse of the affine map; constant columns restore their constant.
Dataset denormalize(const Dataset& ds, const NormalizationParams& params);

/// Random disjoint row split into halves of sizes floor(N/2) and ceil(N/2).
std::pair<Dataset, Dataset> split_reference_query(const Dataset& ds, SeededRng rng);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds over a random permutation of [0, n). The first n % k folds get
/// one extra element. Index lists are sorted.
std::vector<Fold> kfold_indices(std::size_t n, std::size_t k, SeededRng rng);

}  // namespace datafix
