#include <gtest/gtest.h>

#include <map>

#include "datafix/divergence.hpp"
#include "datafix/imputers.hpp"

using namespace datafix;

namespace {

Dataset with_kinds(const Matrix& m, std::vector<FeatureKind> kinds) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < kinds.size(); ++j) names.push_back("c" + std::to_string(j));
  return Dataset(m, std::move(kinds), std::move(names));
}

void expect_unmasked_identical(const Dataset& out, const Dataset& in, const CorruptionMask& mask) {
  for (auto j : mask.complement(in.cols())) {
    for (std::size_t i = 0; i < in.rows(); ++i) {
      EXPECT_EQ(out.values()(i, j), in.values()(i, j));
    }
  }
}

}  // namespace

TEST(KnnImpute, NearestNeighbour) {
  Matrix x(2, 2), y(1, 2);
  x << 0, 0, 1, 1;
  y << 0, 9;
  const CorruptionMask mask({1}, 2);
  const auto out = knn_impute(Dataset::continuous(x), Dataset::continuous(y), mask, 1);
  EXPECT_EQ(out.values.values()(0, 1), 0.0);
  EXPECT_EQ(out.values.values()(0, 0), 0.0);
  EXPECT_EQ(out.method, ImputeMethod::kKnn);
}

TEST(KnnImpute, AllNeighboursGiveColumnMean) {
  SeededRng rng(1);
  Matrix x(20, 3), y(5, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform();
  const CorruptionMask mask({0, 2}, 3);
  const auto out = knn_impute(Dataset::continuous(x), Dataset::continuous(y), mask, 20);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(out.values.values()(i, 0), x.col(0).mean(), 1e-12);
    EXPECT_NEAR(out.values.values()(i, 2), x.col(2).mean(), 1e-12);
  }
  expect_unmasked_identical(out.values, Dataset::continuous(y), mask);
}

TEST(KnnImpute, CategoricalTieGoesLow) {
  Matrix x(2, 2), y(1, 2);
  x << 0, 1, 0, 0;
  y << 0, 1;
  const std::vector kinds{FeatureKind::kContinuous, FeatureKind::kCategorical};
  const auto out = knn_impute(with_kinds(x, kinds), with_kinds(y, kinds), CorruptionMask({1}, 2), 2);
  EXPECT_EQ(out.values.values()(0, 1), 0.0);
}

TEST(LinRegImpute, RecoversExactLinearMap) {
  SeededRng rng(2);
  Matrix x(50, 3), y(10, 3);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = rng.uniform();
    x(i, 2) = rng.uniform();
    x(i, 1) = 2 * x(i, 0);
  }
  for (Eigen::Index i = 0; i < 10; ++i) {
    // Stay inside the reference range so clipping does not apply.
    y(i, 0) = rng.uniform(0.1, 0.4);
    y(i, 2) = rng.uniform();
    y(i, 1) = -5;
  }
  const CorruptionMask mask({1}, 3);
  const auto out = linreg_impute(Dataset::continuous(x), Dataset::continuous(y), mask);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(out.values.values()(i, 1), 2 * y(i, 0), 1e-9);
  expect_unmasked_identical(out.values, Dataset::continuous(y), mask);
}

TEST(LinRegImpute, ConstantAndCollinearColumns) {
  Matrix x(6, 3), y(2, 3);
  x << 1, 1, 7, 2, 2, 7, 3, 3, 7, 4, 4, 7, 5, 5, 7, 6, 6, 7;
  y << 2.5, 2.5, 0, 1, 1, 0;
  const auto out = linreg_impute(Dataset::continuous(x), Dataset::continuous(y),
                                 CorruptionMask({2}, 3));
  EXPECT_NEAR(out.values.values()(0, 2), 7.0, 1e-6);
  EXPECT_NEAR(out.values.values()(1, 2), 7.0, 1e-6);
}

TEST(LinRegImpute, IndependentTargetGivesMean) {
  SeededRng rng(3);
  Matrix x(4000, 2), y(3, 2);
  for (Eigen::Index i = 0; i < 4000; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal(3.0, 1.0);
  }
  y << 0, 0, 1, 0, -1, 0;
  const auto out = linreg_impute(Dataset::continuous(x), Dataset::continuous(y),
                                 CorruptionMask({1}, 2));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(out.values.values()(i, 1), 3.0, 0.1);
}

TEST(LinRegImpute, CategoricalSnapsToObservedValue) {
  Matrix x(4, 2), y(2, 2);
  x << 0, 0, 1, 2, 2, 2, 3, 4;
  y << 1.4, 9, 10, 9;
  const std::vector kinds{FeatureKind::kContinuous, FeatureKind::kCategorical};
  const auto out = linreg_impute(with_kinds(x, kinds), with_kinds(y, kinds), CorruptionMask({1}, 2));
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double v = out.values.values()(i, 1);
    EXPECT_TRUE(v == 0 || v == 2 || v == 4) << v;
  }
  EXPECT_EQ(out.values.values()(1, 1), 4.0);
}

TEST(RandomSampleImpute, SingleReferenceRow) {
  Matrix x(1, 3), y(4, 3);
  x << 1, 2, 3;
  y.setZero();
  const CorruptionMask mask({0, 2}, 3);
  const auto out = random_sample_impute(Dataset::continuous(x), Dataset::continuous(y), mask,
                                        SeededRng(0));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_EQ(out.values.values()(i, 0), 1.0);
    EXPECT_EQ(out.values.values()(i, 1), 0.0);
    EXPECT_EQ(out.values.values()(i, 2), 3.0);
  }
}

TEST(RandomSampleImpute, JointBlocksAndMarginal) {
  // Reference blocks are (v, v) for v in 0..4: a joint copy keeps them equal.
  Matrix x(5, 3), y(5000, 3);
  for (Eigen::Index i = 0; i < 5; ++i) x.row(i) << 0, double(i), double(i);
  y.setZero();
  const auto out = random_sample_impute(Dataset::continuous(x), Dataset::continuous(y),
                                        CorruptionMask({1, 2}, 3), SeededRng(4));
  std::map<double, int> counts;
  for (Eigen::Index i = 0; i < 5000; ++i) {
    EXPECT_EQ(out.values.values()(i, 1), out.values.values()(i, 2));
    ++counts[out.values.values()(i, 1)];
  }
  // Chi-square against uniform over 5 cells, 4 dof: 99.9% quantile 18.47.
  double chi2 = 0;
  for (const auto& [v, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_EQ(counts.size(), 5u);
  EXPECT_LT(chi2, 18.47);
}

TEST(RandomSampleImpute, RemovesIndependentBernoulliShift) {
  SeededRng rng(5);
  const std::size_t n = 2000, d = 6;
  Matrix x(n, d), y(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x(i, j) = rng.bernoulli(0.5);
      y(i, j) = rng.bernoulli(j < 2 ? 0.9 : 0.5);
    }
  }
  std::vector<FeatureKind> kinds(d, FeatureKind::kCategorical);
  const auto xd = with_kinds(x, kinds), yd = with_kinds(y, kinds);
  const CorruptionMask mask({0, 1}, d);
  const auto out = random_sample_impute(xd, yd, mask, rng.derive(1));
  DiscriminatorConfig cfg;
  cfg.forest.n_trees = 50;
  EXPECT_GT(estimate_tv(x, y, cfg, 5, rng.derive(2)).mean, 0.2);
  EXPECT_LE(estimate_tv(x, out.values.values(), cfg, 5, rng.derive(2)).mean, 0.05);
}
