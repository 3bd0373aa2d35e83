#include "datafix/imputers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "datafix/parallel.hpp"

namespace datafix {
namespace {

void check_inputs(const Dataset& reference, const Dataset& query, const CorruptionMask& mask,
                  const char* who) {
  if (!reference.same_schema(query)) {
    throw std::invalid_argument(std::string(who) + ": reference and query schemas differ");
  }
  if (reference.rows() == 0) throw std::invalid_argument(std::string(who) + ": empty reference");
  if (mask.empty()) throw std::invalid_argument(std::string(who) + ": empty mask");
  if (mask.indices().back() >= reference.cols()) {
    throw std::invalid_argument(std::string(who) + ": mask index out of range");
  }
  if (mask.size() >= reference.cols()) {
    throw std::invalid_argument(std::string(who) + ": mask covers every column");
  }
}

}  // namespace

std::string to_string(ImputeMethod method) {
  switch (method) {
    case ImputeMethod::kKnn: return "knn";
    case ImputeMethod::kLinReg: return "linreg";
    case ImputeMethod::kRandomSample: return "random";
  }
  return "unknown";
}

ImputedCandidate knn_impute(const Dataset& reference, const Dataset& query,
                            const CorruptionMask& mask, std::size_t k) {
  check_inputs(reference, query, mask, "knn_impute");
  const std::size_t nx = reference.rows();
  if (k == 0 || k > nx) throw std::invalid_argument("knn_impute: k must be in [1, N_x]");
  const auto keep = mask.complement(reference.cols());
  const auto& x = reference.values();
  Matrix out = query.values();

  parallel_for(query.rows(), [&](std::size_t i) {
    const auto ri = static_cast<Eigen::Index>(i);
    std::vector<std::pair<double, std::size_t>> dist(nx);
    for (std::size_t r = 0; r < nx; ++r) {
      const auto rr = static_cast<Eigen::Index>(r);
      double s = 0.0;
      for (auto c : keep) {
        const double diff = x(rr, static_cast<Eigen::Index>(c)) - out(ri, static_cast<Eigen::Index>(c));
        s += diff * diff;
      }
      dist[r] = {s, r};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (auto c : mask) {
      const auto cc = static_cast<Eigen::Index>(c);
      if (reference.is_categorical(c)) {
        std::map<double, std::size_t> votes;
        for (std::size_t n = 0; n < k; ++n) ++votes[x(static_cast<Eigen::Index>(dist[n].second), cc)];
        double best = votes.begin()->first;
        std::size_t best_count = 0;
        for (const auto& [value, count] : votes) {
          if (count > best_count) {
            best = value;
            best_count = count;
          }
        }
        out(ri, cc) = best;
      } else {
        double s = 0.0;
        for (std::size_t n = 0; n < k; ++n) s += x(static_cast<Eigen::Index>(dist[n].second), cc);
        out(ri, cc) = s / static_cast<double>(k);
      }
    }
  });
  return {query.with_values(std::move(out)), ImputeMethod::kKnn};
}

ImputedCandidate linreg_impute(const Dataset& reference, const Dataset& query,
                               const CorruptionMask& mask) {
  check_inputs(reference, query, mask, "linreg_impute");
  const auto keep = mask.complement(reference.cols());
  const auto nx = static_cast<Eigen::Index>(reference.rows());
  const auto p = static_cast<Eigen::Index>(keep.size());
  const auto m = static_cast<Eigen::Index>(mask.size());
  const auto& x = reference.values();

  auto design = [&](const Matrix& v) {
    Eigen::MatrixXd z(v.rows(), p + 1);
    z.col(0).setOnes();
    for (Eigen::Index j = 0; j < p; ++j) z.col(j + 1) = v.col(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(j)]));
    return z;
  };
  const Eigen::MatrixXd z = design(x);
  Eigen::MatrixXd t(nx, m);
  for (Eigen::Index j = 0; j < m; ++j) t.col(j) = x.col(static_cast<Eigen::Index>(mask.indices()[static_cast<std::size_t>(j)]));

  Eigen::MatrixXd gram = z.transpose() * z;
  const Eigen::MatrixXd rhs = z.transpose() * t;
  Eigen::MatrixXd coef;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  bool ok = nx > p && llt.info() == Eigen::Success;
  if (ok) {
    // A numerically singular Gram matrix can still factor; check its
    // conditioning through the Cholesky diagonal.
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    ok = diag.minCoeff() > 1e-7 * diag.maxCoeff();
  }
  if (ok) {
    coef = llt.solve(rhs);
  } else {
    gram.diagonal().array() += 1e-6;
    coef = gram.ldlt().solve(rhs);
  }

  const Eigen::MatrixXd pred = design(query.values()) * coef;
  Matrix out = query.values();
  for (Eigen::Index j = 0; j < m; ++j) {
    const std::size_t c = mask.indices()[static_cast<std::size_t>(j)];
    const auto cc = static_cast<Eigen::Index>(c);
    const double lo = x.col(cc).minCoeff();
    const double hi = x.col(cc).maxCoeff();
    std::vector<double> categories;
    if (reference.is_categorical(c)) {
      for (Eigen::Index r = 0; r < nx; ++r) categories.push_back(x(r, cc));
      std::sort(categories.begin(), categories.end());
      categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
    }
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double v = std::clamp(pred(i, j), lo, hi);
      if (!categories.empty()) {
        auto it = std::lower_bound(categories.begin(), categories.end(), v);
        if (it == categories.end()) {
          v = categories.back();
        } else if (it != categories.begin() && v - *(it - 1) <= *it - v) {
          v = *(it - 1);
        } else {
          v = *it;
        }
      }
      out(i, cc) = v;
    }
  }
  return {query.with_values(std::move(out)), ImputeMethod::kLinReg};
}

ImputedCandidate random_sample_impute(const Dataset& reference, const Dataset& query,
                                      const CorruptionMask& mask, SeededRng rng) {
  check_inputs(reference, query, mask, "random_sample_impute");
  const auto& x = reference.values();
  Matrix out = query.values();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto src = static_cast<Eigen::Index>(rng.uniform_index(reference.rows()));
    for (auto c : mask) out(i, static_cast<Eigen::Index>(c)) = x(src, static_cast<Eigen::Index>(c));
  }
  return {query.with_values(std::move(out)), ImputeMethod::kRandomSample};
}

}  // namespace datafix
