#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "datafix/dataset.hpp"
#include "datafix/rng.hpp"

namespace datafix {

/// Probabilities are clipped to [kProbabilityClip, 1 - kProbabilityClip]
/// before likelihood ratios are formed.
inline constexpr double kProbabilityClip = 1e-6;

/// Flat binary tree. `feature < 0` marks a leaf. Rows go left when
/// `row[feature] <= threshold`.
struct TreeNode {
  std::int32_t feature = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;
  /// Leaf output: class-1 probability for forest trees, a log-odds
  /// increment (already scaled by the learning rate) for boosted trees.
  double value = 0.0;
  /// Weighted impurity (forest) or loss (boosted) decrease of the split.
  double gain = 0.0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  double predict(const double* row) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const auto& n = nodes_[i];
      i = static_cast<std::size_t>(row[n.feature] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
  }

 private:
  std::vector<TreeNode> nodes_;
};

struct ForestParams {
  std::size_t n_trees = 100;
  /// 0 = grow until leaves are pure or too small to split.
  std::size_t max_depth = 0;
  std::size_t min_samples_split = 2;
  /// 0 = floor(sqrt(d)), at least 1.
  std::size_t max_features = 0;
  bool bootstrap = true;
  /// Quantile bins per feature used for split search.
  std::size_t max_bins = 255;
};

/// Random forest of Gini-impurity classification trees.
class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, std::vector<double> importances,
              std::size_t n_features)
      : trees_(std::move(trees)), importances_(std::move(importances)), n_features_(n_features) {}

  const std::vector<DecisionTree>& trees() const { return trees_; }
  /// Mean decrease of impurity, normalized to sum to 1 (all zero when no
  /// tree ever split).
  const std::vector<double>& importances() const { return importances_; }
  std::size_t n_features() const { return n_features_; }

  /// P(class = 1), the mean of the trees' leaf probabilities.
  std::vector<double> predict_proba(const Matrix& rows) const;
  double predict_proba_row(const double* row) const;

 private:
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
  std::size_t n_features_ = 0;
};

struct BoostedParams {
  std::size_t n_rounds = 200;
  std::size_t max_depth = 6;
  double learning_rate = 0.1;
  double l2 = 1.0;
  double min_child_weight = 1.0;
  std::size_t max_bins = 255;
  /// Fraction of rows drawn (per round) to grow each tree.
  double subsample = 1.0;
  /// Reweight samples so both classes carry equal total weight.
  bool balance_classes = true;
};

/// Gradient-boosted regression trees on the logistic loss.
class BoostedModel {
 public:
  BoostedModel() = default;
  BoostedModel(std::vector<DecisionTree> trees, double base_score, double learning_rate,
               std::size_t n_features, std::vector<double> train_loss)
      : trees_(std::move(trees)),
        base_score_(base_score),
        learning_rate_(learning_rate),
        n_features_(n_features),
        train_loss_(std::move(train_loss)) {}

  const std::vector<DecisionTree>& trees() const { return trees_; }
  double base_score() const { return base_score_; }
  double learning_rate() const { return learning_rate_; }
  std::size_t n_features() const { return n_features_; }
  /// Weighted mean training log-loss: entry 0 before any tree, entry t
  /// after t rounds.
  const std::vector<double>& train_loss() const { return train_loss_; }

  double decision_function(const double* row) const {
    double s = base_score_;
    for (const auto& t : trees_) s += t.predict(row);
    return s;
  }
  double predict_proba_row(const double* row) const;
  std::vector<double> predict_proba(const Matrix& rows) const;
  /// Logistic link applied to a decision_function value.
  static double proba_from_score(double score);

 private:
  std::vector<DecisionTree> trees_;
  double base_score_ = 0.0;
  double learning_rate_ = 0.1;
  std::size_t n_features_ = 0;
  std::vector<double> train_loss_;
};

/// Trains on `class0` rows labeled 0 and `class1` rows labeled 1. In this
/// library class 0 is always the reference and class 1 the query.
ForestModel fit_forest(const Matrix& class0, const Matrix& class1, const ForestParams& params,
                       SeededRng rng);

BoostedModel fit_boosted(const Matrix& class0, const Matrix& class1, const BoostedParams& params,
                         SeededRng rng);

double clip_probability(double p);

/// Reference-vs-query likelihood ratio from a query-class probability:
/// r = (1 - p) / p with p clipped, so r > 1 means "looks like reference".
double likelihood_ratio(double query_probability);
std::vector<double> likelihood_ratio(std::span<const double> query_probabilities);

namespace detail {

/// Per-column quantile bins over a training matrix. Split thresholds sit
/// at midpoints between adjacent observed values, so they always lie
/// strictly between two training values.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Column-major bin codes.
  std::vector<std::uint8_t> codes;
  /// thresholds[j][b] separates bin b from bin b + 1.
  std::vector<std::vector<double>> thresholds;

  std::uint8_t code(std::size_t row, std::size_t col) const { return codes[col * rows + row]; }
  const std::uint8_t* column(std::size_t col) const { return codes.data() + col * rows; }
  std::size_t bins(std::size_t col) const { return thresholds[col].size() + 1; }
};

/// Bins the vertical stack [top; bottom].
BinnedMatrix bin_rows(const Matrix& top, const Matrix& bottom, std::size_t max_bins);

}  // namespace detail
}  // namespace datafix
