#include <gtest/gtest.h>

#include "datafix/correct.hpp"

using namespace datafix;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, SeededRng rng) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace

TEST(DetectIncorrect, Examples) {
  EXPECT_TRUE(detect_incorrect(std::vector<double>{1.0, 2.0, 5.0}).empty());
  EXPECT_EQ(detect_incorrect(std::vector<double>{0.2, 0.9, 1.5, 3.0}),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(detect_incorrect(std::vector<double>{0.5, 0.6, 0.7}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(detect_incorrect(std::vector<double>{0.7, 0.3, 0.3, 0.1, 2, 2}),
            (std::vector<std::size_t>{3, 1, 2}));
}

TEST(BuildPool, SizesAndSources) {
  SeededRng rng(1);
  const auto x = Dataset::continuous(gaussian(100, 4, rng.derive(0)));
  const auto y = Dataset::continuous(gaussian(100, 4, rng.derive(1)));
  const CorruptionMask mask({1, 3}, 4);
  const auto pool = build_pool(x, y, y, mask, 0, 50000, rng.derive(2));
  EXPECT_EQ(pool.size(), 300u);
  EXPECT_EQ(pool.blocks.cols(), 2);
  EXPECT_EQ(pool.sources.front(), ProposalSource::kReference);
  EXPECT_EQ(pool.sources[100], ProposalSource::kLinReg);
  EXPECT_EQ(pool.sources.back(), ProposalSource::kCurrent);
  EXPECT_EQ(pool.blocks(7, 1), x.values()(7, 3));

  const auto with_perm = build_pool(x, y, y, mask, 2, 50000, rng.derive(2));
  EXPECT_EQ(with_perm.size(), 500u);
  EXPECT_EQ(with_perm.sources[250], ProposalSource::kPermutation);

  const auto capped = build_pool(x, y, y, mask, 2, 250, rng.derive(2));
  EXPECT_EQ(capped.size(), 250u);
  std::size_t current = 0;
  for (auto s : capped.sources) current += s == ProposalSource::kCurrent;
  EXPECT_EQ(current, 100u);
  for (std::size_t i = 1; i < capped.size(); ++i) {
    EXPECT_LE(static_cast<int>(capped.sources[i - 1]), static_cast<int>(capped.sources[i]));
  }
}

TEST(BestProposal, IncumbentOnlyAndTies) {
  SeededRng rng(2);
  const Matrix x = gaussian(200, 3, rng.derive(0));
  Matrix y = gaussian(200, 3, rng.derive(1));
  y.col(0).array() += 2.0;
  DiscriminatorConfig cfg;
  cfg.kind = ModelKind::kBoosted;
  cfg.boosted.n_rounds = 20;
  const auto model = fit_discriminator(x, y, cfg, rng.derive(2));
  const CorruptionMask mask({0}, 3);
  const std::vector<double> row{2.5, 0.1, -0.3};

  ProposalPool single;
  single.blocks = Matrix::Constant(1, 1, 2.5);
  single.sources = {ProposalSource::kCurrent};
  EXPECT_EQ(best_proposal(row, single, mask, model), 0u);

  ProposalPool twins;
  twins.blocks = Matrix(3, 1);
  twins.blocks << 2.5, 0.0, 0.0;
  twins.sources = {ProposalSource::kReference, ProposalSource::kReference,
                   ProposalSource::kCurrent};
  EXPECT_EQ(best_proposal(row, twins, mask, model), 1u);
}

TEST(BestProposal, PlantedTruthIsSelected) {
  // Query column 1 is a copy of column 0 in the reference; the corrupted
  // query breaks it. The true block restores the relation.
  SeededRng rng(3);
  Matrix x = gaussian(1500, 3, rng.derive(0));
  x.col(1) = x.col(0);
  Matrix y = gaussian(1500, 3, rng.derive(1));
  DiscriminatorConfig cfg;
  cfg.kind = ModelKind::kBoosted;
  cfg.boosted.n_rounds = 100;
  const auto model = fit_discriminator(x, y, cfg, rng.derive(2));
  const CorruptionMask mask({1}, 3);
  ProposalPool pool;
  pool.blocks = Matrix(4, 1);
  pool.blocks << -1.5, 1.5, 0.8, 0.0;
  pool.sources.assign(4, ProposalSource::kReference);
  const std::vector<double> row{0.8, -1.2, 0.3};
  EXPECT_EQ(best_proposal(row, pool, mask, model), 2u);
}

TEST(BestProposal, FastPathMatchesRowByRow) {
  SeededRng rng(4);
  const Matrix x = gaussian(300, 5, rng.derive(0));
  Matrix y = gaussian(300, 5, rng.derive(1));
  y.col(1).array() *= 2.0;
  y.col(3).array() += 1.0;
  const CorruptionMask mask({1, 3}, 5);
  for (auto kind : {ModelKind::kBoosted, ModelKind::kForest}) {
    DiscriminatorConfig cfg;
    cfg.kind = kind;
    cfg.boosted.n_rounds = 40;
    cfg.forest.n_trees = 10;
    const auto model = fit_discriminator(x, y, cfg, rng.derive(2));
    const auto pool = build_pool(Dataset::continuous(x), Dataset::continuous(y),
                                 Dataset::continuous(y), mask, 1, 50000, rng.derive(3));
    const Matrix rows = y.topRows(70);
    const auto batch = best_proposals(rows, pool, mask, model);
    ASSERT_EQ(batch.size(), 70u);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const std::vector<double> row(rows.row(i).begin(), rows.row(i).end());
      EXPECT_EQ(batch[i], best_proposal(row, pool, mask, model)) << "row " << i;
    }
  }
}

TEST(Correct, NoShiftConvergesAfterInitialSelection) {
  SeededRng rng(5);
  const auto x = Dataset::continuous(gaussian(600, 5, rng.derive(0)));
  const auto y = Dataset::continuous(gaussian(600, 5, rng.derive(1)));
  CorrectConfig cfg;
  cfg.boosted.n_rounds = 50;
  const auto report = correct(x, y, CorruptionMask({0, 1}, 5), cfg, rng.derive(2));
  EXPECT_TRUE(report.converged);
  EXPECT_TRUE(report.epochs.empty());
  EXPECT_LT(report.final_d_hat, 0.1);
}

TEST(Correct, ReducesShiftAndKeepsUnmaskedColumns) {
  SeededRng rng(6);
  Matrix xm = gaussian(800, 6, rng.derive(0));
  Matrix ym = gaussian(800, 6, rng.derive(1));
  // Masked columns depend on the others in the reference; the query breaks it.
  xm.col(4) = xm.col(0) + 0.2 * xm.col(4);
  xm.col(5) = -xm.col(1) + 0.2 * xm.col(5);
  ym.col(4).array() += 3.0;
  ym.col(5).array() *= -4.0;
  CorrectConfig cfg;
  cfg.boosted.n_rounds = 60;
  cfg.epsilon = -1.0;
  const CorruptionMask mask({4, 5}, 6);
  const auto report =
      correct(Dataset::continuous(xm), Dataset::continuous(ym), mask, cfg, rng.derive(2));
  EXPECT_EQ(report.initial, ImputeMethod::kLinReg);
  EXPECT_LT(report.final_d_hat, 0.2);
  for (auto j : mask.complement(6)) {
    for (Eigen::Index i = 0; i < ym.rows(); ++i) {
      EXPECT_EQ(report.corrected.values()(i, j), ym(i, j));
    }
  }
  for (const auto& e : report.epochs) {
    EXPECT_LE(e.replaced, e.flagged);
    EXPECT_LE(e.flagged, 400u);
  }
}

TEST(Correct, Deterministic) {
  SeededRng rng(7);
  const auto x = Dataset::continuous(gaussian(300, 4, rng.derive(0)));
  Matrix ym = gaussian(300, 4, rng.derive(1));
  ym.col(2).array() += 2.0;
  CorrectConfig cfg;
  cfg.boosted.n_rounds = 30;
  cfg.epsilon = -1.0;
  cfg.epochs = 1;
  const CorruptionMask mask({2}, 4);
  const auto a = correct(x, Dataset::continuous(ym), mask, cfg, SeededRng(1));
  const auto b = correct(x, Dataset::continuous(ym), mask, cfg, SeededRng(1));
  EXPECT_EQ(a.corrected.values(), b.corrected.values());
  EXPECT_EQ(a.final_d_hat, b.final_d_hat);
}
