#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "datafix/discriminators.hpp"
#include "datafix/parallel.hpp"

namespace datafix {
namespace {

using detail::BinnedMatrix;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Gradient, hessian and row count per (feature, bin).
struct Histogram {
  std::vector<double> g, h, c;
  void resize(std::size_t total_bins) {
    g.assign(total_bins, 0.0);
    h.assign(total_bins, 0.0);
    c.assign(total_bins, 0.0);
  }
};

struct LeafWork {
  std::size_t node;
  std::size_t begin, end;
  double g, h;
  Histogram hist;
};

class BoostedTreeGrower {
 public:
  BoostedTreeGrower(const BinnedMatrix& bm, const BoostedParams& params)
      : bm_(bm), params_(params), offsets_(bm.cols + 1, 0) {
    for (std::size_t j = 0; j < bm.cols; ++j) offsets_[j + 1] = offsets_[j] + bm.bins(j);
  }

  // Grows one depth-wise tree over the rows in idx. Leaf values are shrunk
  // by the learning rate; row_delta[i] receives the leaf value of row i.
  DecisionTree grow(std::vector<std::uint32_t>& idx, const std::vector<double>& grad,
                    const std::vector<double>& hess, std::vector<double>& row_delta) {
    std::vector<TreeNode> nodes(1);
    std::vector<LeafWork> level;
    {
      LeafWork root{0, 0, idx.size(), 0.0, 0.0, {}};
      for (auto i : idx) {
        root.g += grad[i];
        root.h += hess[i];
      }
      build_histogram(root, idx, grad, hess);
      level.push_back(std::move(root));
    }
    std::vector<LeafWork> leaves;

    for (std::size_t depth = 0; depth < params_.max_depth && !level.empty(); ++depth) {
      std::vector<LeafWork> next;
      for (auto& work : level) {
        std::size_t feature = 0, bin = 0;
        double gl = 0, hl = 0, gain = 0;
        if (work.end - work.begin < 2 ||
            !find_split(work, feature, bin, gl, hl, gain)) {
          leaves.push_back(std::move(work));
          continue;
        }
        const std::uint8_t* col = bm_.column(feature);
        const auto mid_it = std::partition(
            idx.begin() + static_cast<std::ptrdiff_t>(work.begin),
            idx.begin() + static_cast<std::ptrdiff_t>(work.end),
            [&](std::uint32_t i) { return col[i] <= bin; });
        const auto mid = static_cast<std::size_t>(mid_it - idx.begin());

        const auto left_id = nodes.size();
        nodes.emplace_back();
        nodes.emplace_back();
        auto& node = nodes[work.node];
        node.feature = static_cast<std::int32_t>(feature);
        node.threshold = bm_.thresholds[feature][bin];
        node.left = static_cast<std::int32_t>(left_id);
        node.right = static_cast<std::int32_t>(left_id + 1);
        node.gain = gain;

        LeafWork left{left_id, work.begin, mid, gl, hl, {}};
        LeafWork right{left_id + 1, mid, work.end, work.g - gl, work.h - hl, {}};
        // Histogram of the smaller child is built, the sibling's is the
        // parent's minus it.
        LeafWork& small = (mid - work.begin) <= (work.end - mid) ? left : right;
        LeafWork& large = &small == &left ? right : left;
        build_histogram(small, idx, grad, hess);
        large.hist = std::move(work.hist);
        for (std::size_t b = 0; b < large.hist.g.size(); ++b) {
          large.hist.g[b] -= small.hist.g[b];
          large.hist.h[b] -= small.hist.h[b];
          large.hist.c[b] -= small.hist.c[b];
        }
        next.push_back(std::move(left));
        next.push_back(std::move(right));
      }
      level = std::move(next);
    }
    for (auto& w : level) leaves.push_back(std::move(w));

    for (const auto& leaf : leaves) {
      const double value = -params_.learning_rate * leaf.g / (leaf.h + params_.l2);
      nodes[leaf.node].value = value;
      for (std::size_t k = leaf.begin; k < leaf.end; ++k) row_delta[idx[k]] = value;
    }
    return DecisionTree(std::move(nodes));
  }

 private:
  void build_histogram(LeafWork& work, const std::vector<std::uint32_t>& idx,
                       const std::vector<double>& grad, const std::vector<double>& hess) {
    work.hist.resize(offsets_.back());
    for (std::size_t j = 0; j < bm_.cols; ++j) {
      const std::uint8_t* col = bm_.column(j);
      double* g = work.hist.g.data() + offsets_[j];
      double* h = work.hist.h.data() + offsets_[j];
      double* c = work.hist.c.data() + offsets_[j];
      for (std::size_t k = work.begin; k < work.end; ++k) {
        const auto i = idx[k];
        const auto b = col[i];
        g[b] += grad[i];
        h[b] += hess[i];
        c[b] += 1.0;
      }
    }
  }

  bool find_split(const LeafWork& work, std::size_t& feature, std::size_t& bin, double& best_gl,
                  double& best_hl, double& best_gain) const {
    const double lambda = params_.l2;
    const double parent = work.g * work.g / (work.h + lambda);
    bool found = false;
    best_gain = 0.0;
    for (std::size_t j = 0; j < bm_.cols; ++j) {
      const std::size_t nb = bm_.bins(j);
      const double* g = work.hist.g.data() + offsets_[j];
      const double* h = work.hist.h.data() + offsets_[j];
      const double* c = work.hist.c.data() + offsets_[j];
      std::size_t b = 0;
      while (b < nb && c[b] <= 0.5) ++b;
      double gl = 0.0, hl = 0.0;
      while (b < nb) {
        gl += g[b];
        hl += h[b];
        std::size_t next = b + 1;
        while (next < nb && c[next] <= 0.5) ++next;
        if (next >= nb) break;
        const double gr = work.g - gl, hr = work.h - hl;
        if (hl >= params_.min_child_weight && hr >= params_.min_child_weight) {
          const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
          if (gain > best_gain + 1e-12) {
            best_gain = gain;
            feature = j;
            bin = b + (next - b - 1) / 2;
            best_gl = gl;
            best_hl = hl;
            found = true;
          }
        }
        b = next;
      }
    }
    return found;
  }

  const BinnedMatrix& bm_;
  const BoostedParams& params_;
  std::vector<std::size_t> offsets_;
};

double weighted_log_loss(const std::vector<double>& score, const std::vector<std::uint8_t>& y,
                         const std::vector<double>& w) {
  double loss = 0.0, total = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    loss += w[i] * (softplus(score[i]) - (y[i] ? score[i] : 0.0));
    total += w[i];
  }
  return loss / total;
}

}  // namespace

double BoostedModel::proba_from_score(double score) { return sigmoid(score); }

double BoostedModel::predict_proba_row(const double* row) const {
  return sigmoid(decision_function(row));
}

std::vector<double> BoostedModel::predict_proba(const Matrix& rows) const {
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

BoostedModel fit_boosted(const Matrix& class0, const Matrix& class1, const BoostedParams& params,
                         SeededRng rng) {
  if (class0.cols() != class1.cols()) throw std::invalid_argument("class feature widths differ");
  if (class0.cols() == 0) throw std::invalid_argument("cannot train on zero features");
  if (class0.rows() == 0 || class1.rows() == 0) {
    throw std::invalid_argument("both classes need at least one row");
  }
  if (params.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (params.subsample <= 0.0 || params.subsample > 1.0) {
    throw std::invalid_argument("subsample must be in (0, 1]");
  }

  const auto bm = detail::bin_rows(class0, class1, params.max_bins);
  const std::size_t n = bm.rows;
  const auto n0 = static_cast<std::size_t>(class0.rows());
  std::vector<std::uint8_t> y(n, 0);
  std::fill(y.begin() + static_cast<std::ptrdiff_t>(n0), y.end(), 1);

  std::vector<double> w(n, 1.0);
  if (params.balance_classes) {
    const double w0 = static_cast<double>(n) / (2.0 * static_cast<double>(n0));
    const double w1 = static_cast<double>(n) / (2.0 * static_cast<double>(n - n0));
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] ? w1 : w0;
  }
  double sum0 = 0.0, sum1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) (y[i] ? sum1 : sum0) += w[i];
  const double base_score = std::log(sum1 / sum0);

  std::vector<double> score(n, base_score), grad(n), hess(n), delta(n, 0.0);
  std::vector<double> loss{weighted_log_loss(score, y, w)};
  std::vector<DecisionTree> trees;
  trees.reserve(params.n_rounds);
  BoostedTreeGrower grower(bm, params);
  std::vector<std::uint32_t> idx;

  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = w[i] * (p - y[i]);
      hess[i] = std::max(w[i] * p * (1.0 - p), 1e-16);
    }
    idx.clear();
    if (params.subsample < 1.0) {
      SeededRng round_rng = rng.derive(round);
      for (std::size_t i = 0; i < n; ++i) {
        if (round_rng.uniform() < params.subsample) idx.push_back(static_cast<std::uint32_t>(i));
      }
      if (idx.empty()) idx.push_back(static_cast<std::uint32_t>(round_rng.uniform_index(n)));
    } else {
      idx.resize(n);
      std::iota(idx.begin(), idx.end(), 0u);
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    trees.push_back(grower.grow(idx, grad, hess, delta));
    if (params.subsample < 1.0) {
      // Out-of-sample rows still move by the tree's prediction.
      const auto& tree = trees.back();
      std::vector<std::uint8_t> in_sample(n, 0);
      for (auto i : idx) in_sample[i] = 1;
      const Matrix* blocks[2] = {&class0, &class1};
      for (std::size_t i = 0; i < n; ++i) {
        if (in_sample[i]) continue;
        const Matrix& m = *blocks[y[i]];
        const auto r = static_cast<Eigen::Index>(y[i] ? i - n0 : i);
        delta[i] = tree.predict(m.row(r).data());
      }
    }
    for (std::size_t i = 0; i < n; ++i) score[i] += delta[i];
    loss.push_back(weighted_log_loss(score, y, w));
  }
  return BoostedModel(std::move(trees), base_score, params.learning_rate, bm.cols,
                      std::move(loss));
}

}  // namespace datafix
