#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "datafix/discriminators.hpp"
#include "datafix/parallel.hpp"

namespace datafix {
namespace {

using detail::BinnedMatrix;

struct Split {
  std::size_t feature = 0;
  std::size_t bin = 0;
  double score = -1.0;  // sum over children of (sum_c w_c^2) / w
  bool found = false;
};

class TreeGrower {
 public:
  TreeGrower(const BinnedMatrix& bm, const std::vector<std::uint8_t>& labels,
             const std::array<double, 2>& class_weight, const ForestParams& params,
             std::size_t max_features)
      : bm_(bm),
        labels_(labels),
        class_weight_(class_weight),
        params_(params),
        max_features_(max_features),
        hist_(2 * 256, 0.0) {}

  DecisionTree grow(SeededRng rng, std::vector<double>& importance) {
    const std::size_t n = bm_.rows;
    std::vector<double> weight(n, 0.0);
    std::vector<std::uint32_t> idx;
    if (params_.bootstrap) {
      std::vector<std::uint32_t> counts(n, 0);
      for (std::size_t s = 0; s < n; ++s) ++counts[rng.uniform_index(n)];
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        idx.push_back(static_cast<std::uint32_t>(i));
        weight[i] = counts[i] * class_weight_[labels_[i]];
      }
    } else {
      idx.resize(n);
      std::iota(idx.begin(), idx.end(), 0u);
      for (std::size_t i = 0; i < n; ++i) weight[i] = class_weight_[labels_[i]];
    }

    std::vector<std::size_t> features(bm_.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});

    importance.assign(bm_.cols, 0.0);
    std::vector<TreeNode> nodes(1);
    struct Pending {
      std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack{{0, 0, idx.size(), 0}};

    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();

      double w0 = 0.0, w1 = 0.0;
      std::size_t c0 = 0, c1 = 0;
      for (std::size_t k = cur.begin; k < cur.end; ++k) {
        const auto i = idx[k];
        if (labels_[i]) {
          w1 += weight[i];
          ++c1;
        } else {
          w0 += weight[i];
          ++c0;
        }
      }
      nodes[cur.node].value = w1 / (w0 + w1);

      const bool pure = c0 == 0 || c1 == 0;
      const bool too_small = cur.end - cur.begin < params_.min_samples_split;
      const bool too_deep = params_.max_depth > 0 && cur.depth >= params_.max_depth;
      if (pure || too_small || too_deep) continue;

      const Split split = best_split(idx, weight, cur.begin, cur.end, features, rng);
      if (!split.found) continue;

      const std::uint8_t* col = bm_.column(split.feature);
      const auto mid_it = std::partition(
          idx.begin() + static_cast<std::ptrdiff_t>(cur.begin),
          idx.begin() + static_cast<std::ptrdiff_t>(cur.end),
          [&](std::uint32_t i) { return col[i] <= split.bin; });
      const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

      const double total = w0 + w1;
      const double parent_term = (w0 * w0 + w1 * w1) / total;
      const double decrease = std::max(0.0, split.score - parent_term);
      importance[split.feature] += decrease;

      const auto left = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      auto& node = nodes[cur.node];
      node.feature = static_cast<std::int32_t>(split.feature);
      node.threshold = bm_.thresholds[split.feature][split.bin];
      node.left = left;
      node.right = left + 1;
      node.gain = decrease;
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({static_cast<std::size_t>(left + 1), mid, cur.end, cur.depth + 1});
      stack.push_back({static_cast<std::size_t>(left), cur.begin, mid, cur.depth + 1});
    }
    return DecisionTree(std::move(nodes));
  }

 private:
  Split best_split(const std::vector<std::uint32_t>& idx, const std::vector<double>& weight,
                   std::size_t begin, std::size_t end, std::vector<std::size_t>& features,
                   SeededRng& rng) {
    Split best;
    const std::size_t d = features.size();
    std::size_t informative = 0;
    for (std::size_t t = 0; t < d && informative < max_features_; ++t) {
      std::swap(features[t], features[t + rng.uniform_index(d - t)]);
      const std::size_t f = features[t];
      const std::uint8_t* col = bm_.column(f);

      std::size_t lo = 255, hi = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = idx[k];
        const std::size_t b = col[i];
        hist_[2 * b + labels_[i]] += weight[i];
        lo = std::min(lo, b);
        hi = std::max(hi, b);
      }
      if (lo == hi) {
        hist_[2 * lo] = hist_[2 * lo + 1] = 0.0;
        continue;
      }
      ++informative;

      double tot0 = 0.0, tot1 = 0.0;
      for (std::size_t b = lo; b <= hi; ++b) {
        tot0 += hist_[2 * b];
        tot1 += hist_[2 * b + 1];
      }
      double l0 = 0.0, l1 = 0.0;
      std::size_t b = lo;
      while (b < hi) {
        l0 += hist_[2 * b];
        l1 += hist_[2 * b + 1];
        std::size_t next = b + 1;
        while (hist_[2 * next] == 0.0 && hist_[2 * next + 1] == 0.0) ++next;
        const double lw = l0 + l1;
        const double r0 = tot0 - l0, r1 = tot1 - l1;
        const double rw = r0 + r1;
        const double score = (l0 * l0 + l1 * l1) / lw + (r0 * r0 + r1 * r1) / rw;
        if (score > best.score || (score == best.score && f < best.feature)) {
          best.score = score;
          best.feature = f;
          // Threshold centred in the gap of empty bins between b and next.
          best.bin = b + (next - b - 1) / 2;
          best.found = true;
        }
        b = next;
      }
      std::fill(hist_.begin() + static_cast<std::ptrdiff_t>(2 * lo),
                hist_.begin() + static_cast<std::ptrdiff_t>(2 * hi + 2), 0.0);
    }
    return best;
  }

  const BinnedMatrix& bm_;
  const std::vector<std::uint8_t>& labels_;
  std::array<double, 2> class_weight_;
  const ForestParams& params_;
  std::size_t max_features_;
  std::vector<double> hist_;
};

void check_training_input(const Matrix& class0, const Matrix& class1) {
  if (class0.cols() != class1.cols()) throw std::invalid_argument("class feature widths differ");
  if (class0.cols() == 0) throw std::invalid_argument("cannot train on zero features");
  if (class0.rows() == 0 || class1.rows() == 0) {
    throw std::invalid_argument("both classes need at least one row");
  }
}

}  // namespace

std::vector<double> ForestModel::predict_proba(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != n_features_) {
    throw std::invalid_argument("predict_proba: row width does not match model");
  }
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (out.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(out.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      out[i] = predict_proba_row(rows.row(static_cast<Eigen::Index>(i)).data());
    }
  });
  return out;
}

double ForestModel::predict_proba_row(const double* row) const {
  if (trees_.empty()) return 0.5;
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(row);
  return s / static_cast<double>(trees_.size());
}

ForestModel fit_forest(const Matrix& class0, const Matrix& class1, const ForestParams& params,
                       SeededRng rng) {
  check_training_input(class0, class1);
  if (params.n_trees == 0) throw std::invalid_argument("forest needs at least one tree");
  const auto bm = detail::bin_rows(class0, class1, params.max_bins);
  const std::size_t n0 = static_cast<std::size_t>(class0.rows());
  std::vector<std::uint8_t> labels(bm.rows, 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(n0), labels.end(), 1);
  const double n = static_cast<double>(bm.rows);
  const std::array<double, 2> class_weight{n / (2.0 * static_cast<double>(n0)),
                                           n / (2.0 * static_cast<double>(bm.rows - n0))};
  const std::size_t d = bm.cols;
  const std::size_t max_features =
      params.max_features > 0
          ? std::min(params.max_features, d)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

  std::vector<DecisionTree> trees(params.n_trees);
  std::vector<std::vector<double>> per_tree(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    TreeGrower grower(bm, labels, class_weight, params, max_features);
    trees[t] = grower.grow(rng.derive(t), per_tree[t]);
  });

  std::vector<double> importances(d, 0.0);
  for (const auto& imp : per_tree) {
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total <= 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) importances[j] += imp[j] / total;
  }
  const double total = std::accumulate(importances.begin(), importances.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : importances) v /= total;
  }
  return ForestModel(std::move(trees), std::move(importances), d);
}

}  // namespace datafix
