#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "datafix/discriminators.hpp"
#include "datafix/divergence.hpp"

using namespace datafix;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, SeededRng rng, double shift = 0.0,
                std::size_t shifted_col = 0) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal() + (j == shifted_col ? shift : 0.0);
  }
  return m;
}

}  // namespace

TEST(Tree, PredictFollowsThresholds) {
  DecisionTree t({{0, 1, 2, 0.5, 0.0, 0.0}, {-1, -1, -1, 0.0, 0.25, 0.0}, {-1, -1, -1, 0.0, 0.75, 0.0}});
  const double lo[] = {0.5}, hi[] = {0.51};
  EXPECT_EQ(t.predict(lo), 0.25);
  EXPECT_EQ(t.predict(hi), 0.75);
  EXPECT_EQ(t.depth(), 1u);
  EXPECT_EQ(t.leaf_count(), 2u);
}

TEST(Binning, ThresholdsAreMidpoints) {
  Matrix a(3, 1), b(2, 1);
  a << 1, 3, 3;
  b << 2, 7;
  const auto binned = detail::bin_rows(a, b, 255);
  ASSERT_EQ(binned.thresholds[0], (std::vector<double>{1.5, 2.5, 5.0}));
  EXPECT_EQ(binned.code(0, 0), 0);
  EXPECT_EQ(binned.code(1, 0), 2);
  EXPECT_EQ(binned.code(3, 0), 1);
  EXPECT_EQ(binned.code(4, 0), 3);
}

TEST(Binning, CapsBinCount) {
  SeededRng rng(2);
  const Matrix a = gaussian(5000, 1, rng.derive(0));
  const auto binned = detail::bin_rows(a, a, 16);
  EXPECT_LE(binned.bins(0), 16u);
  EXPECT_GE(binned.bins(0), 8u);
}

TEST(LikelihoodRatio, ConventionAndClipping) {
  EXPECT_DOUBLE_EQ(likelihood_ratio(0.5), 1.0);
  EXPECT_DOUBLE_EQ(likelihood_ratio(0.2), 4.0);
  EXPECT_NEAR(likelihood_ratio(0.0), (1 - 1e-6) / 1e-6, 1e-3);
  EXPECT_NEAR(likelihood_ratio(1.0), 1e-6 / (1 - 1e-6), 1e-15);
  EXPECT_EQ(sign_term(1.0), -0.5);
  EXPECT_EQ(sign_term(1.0000001), 0.5);
}

TEST(LikelihoodRatio, TvEqualsTwiceBalancedAccuracyMinusOne) {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rx(7 + trial), ry(13 + 2 * trial);
    for (auto& r : rx) r = std::exp(rng.normal());
    for (auto& r : ry) r = std::exp(rng.normal(-0.3, 1.0));
    // Independent count-based oracle.
    double hx = 0, hy = 0;
    for (double r : rx) hx += r > 1 ? 1 : 0;
    for (double r : ry) hy += r <= 1 ? 1 : 0;
    const double ba = 0.5 * (hx / rx.size() + hy / ry.size());
    EXPECT_NEAR(tv_from_ratios(rx, ry), 2 * ba - 1, 1e-12);
    EXPECT_NEAR(balanced_accuracy_from_ratios(rx, ry), ba, 1e-12);
  }
}

TEST(Forest, SeparatesShiftedFeatureAndRanksIt) {
  SeededRng rng(1);
  const Matrix x = gaussian(400, 5, rng.derive(0));
  const Matrix y = gaussian(400, 5, rng.derive(1), 3.0, 2);
  ForestParams params;
  params.n_trees = 50;
  const auto model = fit_forest(x, y, params, rng.derive(2));
  const auto& imp = model.importances();
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(std::max_element(imp.begin(), imp.end()) - imp.begin(), 2);
  const auto p = model.predict_proba(y);
  const double mean = std::accumulate(p.begin(), p.end(), 0.0) / p.size();
  EXPECT_GT(mean, 0.8);
}

TEST(Forest, DeterministicForSeed) {
  SeededRng rng(3);
  const Matrix x = gaussian(200, 4, rng.derive(0));
  const Matrix y = gaussian(200, 4, rng.derive(1), 1.0, 1);
  ForestParams params;
  params.n_trees = 10;
  const auto a = fit_forest(x, y, params, SeededRng(9));
  const auto b = fit_forest(x, y, params, SeededRng(9));
  EXPECT_EQ(a.predict_proba(x), b.predict_proba(x));
  EXPECT_EQ(a.importances(), b.importances());
}

TEST(Boosted, TrainingLossDecreases) {
  SeededRng rng(4);
  const Matrix x = gaussian(300, 3, rng.derive(0));
  const Matrix y = gaussian(300, 3, rng.derive(1), 1.5, 0);
  BoostedParams params;
  params.n_rounds = 30;
  const auto model = fit_boosted(x, y, params, rng.derive(2));
  const auto& loss = model.train_loss();
  ASSERT_EQ(loss.size(), 31u);
  EXPECT_NEAR(loss.front(), std::log(2.0), 1e-9);
  for (std::size_t t = 1; t < loss.size(); ++t) EXPECT_LE(loss[t], loss[t - 1] + 1e-12);
  const double row[] = {3.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(model.predict_proba_row(row),
                   BoostedModel::proba_from_score(model.decision_function(row)));
  EXPECT_GT(model.predict_proba_row(row), 0.5);
}

TEST(EstimateTv, NearZeroWithoutShift) {
  SeededRng rng(6);
  const Matrix x = gaussian(600, 4, rng.derive(0));
  const Matrix y = gaussian(600, 4, rng.derive(1));
  const auto est = estimate_tv(x, y, {}, 5, rng.derive(2));
  EXPECT_EQ(est.per_fold.size(), 5u);
  EXPECT_LT(std::abs(est.mean), 0.08);
  EXPECT_GE(est.policy_value(), 0.0);
  EXPECT_EQ(est.reference_proba.size(), 600u);
}

TEST(EstimateTv, MatchesAnalyticTvForMeanShift) {
  // TV of N(0,1) vs N(1,1) is 2*Phi(1/2) - 1.
  SeededRng rng(8);
  const Matrix x = gaussian(3000, 1, rng.derive(0));
  const Matrix y = gaussian(3000, 1, rng.derive(1), 1.0, 0);
  const double truth = std::erf(0.5 / std::sqrt(2.0));
  for (auto kind : {ModelKind::kForest, ModelKind::kBoosted}) {
    DiscriminatorConfig cfg;
    cfg.kind = kind;
    cfg.forest.max_depth = 4;
    cfg.boosted.max_depth = 2;
    cfg.boosted.n_rounds = 50;
    const auto est = estimate_tv(x, y, cfg, 5, rng.derive(2));
    EXPECT_NEAR(est.mean, truth, 0.05);
    for (std::size_t f = 0; f < est.per_fold.size(); ++f) {
      EXPECT_NEAR(est.per_fold[f], 2 * est.balanced_accuracy_per_fold[f] - 1, 1e-12);
    }
  }
}

TEST(EstimateTv, SeparableIsNearOne) {
  SeededRng rng(10);
  const Matrix x = gaussian(300, 2, rng.derive(0));
  const Matrix y = gaussian(300, 2, rng.derive(1), 20.0, 1);
  EXPECT_GT(estimate_tv(x, y, {}, 5, rng.derive(2)).mean, 0.98);
}
