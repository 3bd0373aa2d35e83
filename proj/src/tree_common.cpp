#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "datafix/discriminators.hpp"

namespace datafix {

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes_[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

double clip_probability(double p) {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

double likelihood_ratio(double query_probability) {
  const double p = clip_probability(query_probability);
  return (1.0 - p) / p;
}

std::vector<double> likelihood_ratio(std::span<const double> query_probabilities) {
  std::vector<double> out(query_probabilities.size());
  std::transform(query_probabilities.begin(), query_probabilities.end(), out.begin(),
                 [](double p) { return likelihood_ratio(p); });
  return out;
}

namespace detail {
namespace {

double midpoint(double lo, double hi) {
  const double m = lo + (hi - lo) / 2.0;
  return m < hi ? m : lo;
}

std::vector<double> column_thresholds(std::vector<double> values, std::size_t max_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct;
  distinct.reserve(values.size());
  for (double v : values) {
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
  }
  std::vector<double> thresholds;
  if (distinct.size() <= max_bins) {
    thresholds.reserve(distinct.size() > 0 ? distinct.size() - 1 : 0);
    for (std::size_t i = 1; i < distinct.size(); ++i) {
      thresholds.push_back(midpoint(distinct[i - 1], distinct[i]));
    }
    return thresholds;
  }
  // Equal-frequency cuts, each moved to the next change of value.
  const std::size_t n = values.size();
  for (std::size_t b = 1; b < max_bins; ++b) {
    std::size_t pos = b * n / max_bins;
    while (pos < n && values[pos] == values[pos - 1]) ++pos;
    if (pos >= n) break;
    const double t = midpoint(values[pos - 1], values[pos]);
    if (thresholds.empty() || t > thresholds.back()) thresholds.push_back(t);
  }
  return thresholds;
}

}  // namespace

BinnedMatrix bin_rows(const Matrix& top, const Matrix& bottom, std::size_t max_bins) {
  if (top.cols() != bottom.cols()) throw std::invalid_argument("bin_rows: column mismatch");
  if (max_bins < 2 || max_bins > 256) throw std::invalid_argument("max_bins must be in [2, 256]");
  BinnedMatrix bm;
  bm.rows = static_cast<std::size_t>(top.rows() + bottom.rows());
  bm.cols = static_cast<std::size_t>(top.cols());
  bm.codes.resize(bm.rows * bm.cols);
  bm.thresholds.resize(bm.cols);
  const auto n_top = static_cast<std::size_t>(top.rows());
  std::vector<double> column(bm.rows);
  for (std::size_t j = 0; j < bm.cols; ++j) {
    for (std::size_t i = 0; i < bm.rows; ++i) {
      column[i] = i < n_top ? top(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                            : bottom(static_cast<Eigen::Index>(i - n_top),
                                     static_cast<Eigen::Index>(j));
    }
    auto& thr = bm.thresholds[j];
    thr = column_thresholds(column, max_bins);
    std::uint8_t* codes = bm.codes.data() + j * bm.rows;
    for (std::size_t i = 0; i < bm.rows; ++i) {
      codes[i] = static_cast<std::uint8_t>(
          std::lower_bound(thr.begin(), thr.end(), column[i]) - thr.begin());
    }
  }
  return bm;
}

}  // namespace detail
}  // namespace datafix
