#include "datafix/correct.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "datafix/parallel.hpp"

namespace datafix {
namespace {

constexpr std::size_t kTile = 1024;
constexpr std::size_t kRowChunk = 64;

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out.topRows(a.rows()) = a;
  out.bottomRows(b.rows()) = b;
  return out;
}

Matrix masked_block(const Matrix& m, const CorruptionMask& mask) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(mask.size()));
  for (std::size_t j = 0; j < mask.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(mask.indices()[j]));
  }
  return out;
}

Matrix permute_columns(const Matrix& m, SeededRng rng) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const auto perm = rng.permutation(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) out(r, c) = m(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]), c);
  }
  return out;
}

// Generic evaluation: substitute blocks tile by tile and run predict_proba.
std::size_t best_by_tiles(std::span<const double> row, const ProposalPool& pool,
                          const CorruptionMask& mask, const Discriminator& model) {
  const std::size_t n = pool.size();
  const auto d = static_cast<Eigen::Index>(row.size());
  std::size_t best = 0;
  double best_r = -1.0;
  for (std::size_t start = 0; start < n; start += kTile) {
    const std::size_t len = std::min(kTile, n - start);
    Matrix tile(static_cast<Eigen::Index>(len), d);
    for (std::size_t i = 0; i < len; ++i) {
      const auto ti = static_cast<Eigen::Index>(i);
      for (Eigen::Index c = 0; c < d; ++c) tile(ti, c) = row[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < mask.size(); ++j) {
        tile(ti, static_cast<Eigen::Index>(mask.indices()[j])) =
            pool.blocks(static_cast<Eigen::Index>(start + i), static_cast<Eigen::Index>(j));
      }
    }
    const auto ratios = model.likelihood_ratio(tile);
    for (std::size_t i = 0; i < len; ++i) {
      if (ratios[i] > best_r) {
        best_r = ratios[i];
        best = start + i;
      }
    }
  }
  return best;
}

// Boosted models: for every tree, rows that agree on all reachable
// unmasked splits share the tree's output over the whole pool, so the
// pool is walked once per distinct pattern rather than once per row.
void boosted_scores(const BoostedModel& model, const Matrix& rows, std::size_t begin,
                    std::size_t end, const ProposalPool& pool,
                    const std::vector<int>& block_pos, std::vector<double>& score) {
  const std::size_t n_pool = pool.size();
  const std::size_t n_rows = end - begin;
  score.assign(n_rows * n_pool, model.base_score());
  std::vector<std::size_t> pattern_of(n_rows);
  std::vector<double> vals;

  for (const auto& tree : model.trees()) {
    const auto& nodes = tree.nodes();
    std::map<std::vector<std::int8_t>, std::size_t> ids;
    std::vector<const std::vector<std::int8_t>*> patterns;
    std::vector<std::size_t> stack;
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* row = rows.row(static_cast<Eigen::Index>(begin + r)).data();
      std::vector<std::int8_t> outcome(nodes.size(), -1);
      stack.assign(1, 0);
      while (!stack.empty()) {
        const auto& node = nodes[stack.back()];
        stack.pop_back();
        if (node.feature < 0) continue;
        if (block_pos[static_cast<std::size_t>(node.feature)] >= 0) {
          stack.push_back(static_cast<std::size_t>(node.left));
          stack.push_back(static_cast<std::size_t>(node.right));
        } else {
          const bool left = row[node.feature] <= node.threshold;
          outcome[static_cast<std::size_t>(&node - nodes.data())] = left ? 0 : 1;
          stack.push_back(static_cast<std::size_t>(left ? node.left : node.right));
        }
      }
      auto [it, inserted] = ids.emplace(std::move(outcome), patterns.size());
      if (inserted) patterns.push_back(&it->first);
      pattern_of[r] = it->second;
    }

    vals.resize(patterns.size() * n_pool);
    for (std::size_t p = 0; p < patterns.size(); ++p) {
      const auto& outcome = *patterns[p];
      for (std::size_t b = 0; b < n_pool; ++b) {
        std::size_t i = 0;
        while (nodes[i].feature >= 0) {
          const auto& node = nodes[i];
          const int pos = block_pos[static_cast<std::size_t>(node.feature)];
          bool left;
          if (pos >= 0) {
            left = pool.blocks(static_cast<Eigen::Index>(b), pos) <= node.threshold;
          } else {
            left = outcome[i] == 0;
          }
          i = static_cast<std::size_t>(left ? node.left : node.right);
        }
        vals[p * n_pool + b] = nodes[i].value;
      }
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* v = vals.data() + pattern_of[r] * n_pool;
      double* s = score.data() + r * n_pool;
      for (std::size_t b = 0; b < n_pool; ++b) s[b] += v[b];
    }
  }
}

}  // namespace

InitialSelection select_initial(const Dataset& reference, const Dataset& query,
                                const CorruptionMask& mask, const CorrectConfig& config,
                                SeededRng rng) {
  DiscriminatorConfig disc;
  disc.kind = ModelKind::kBoosted;
  disc.boosted = config.boosted;

  InitialSelection sel;
  sel.linreg = linreg_impute(reference, query, mask);
  std::array<ImputedCandidate, 3> candidates{
      knn_impute(reference, query, mask, std::min(config.knn_k, reference.rows())), sel.linreg,
      random_sample_impute(reference, query, mask, rng.derive(0))};
  std::size_t best = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto est = estimate_tv(reference.values(), candidates[c].values.values(), disc, config.folds,
                           rng.derive(1 + c));
    sel.scores[c] = est.mean;
    if (c == 0 || est.mean < sel.scores[best]) {
      best = c;
      sel.estimate = std::move(est);
    }
  }
  sel.candidate = candidates[best];
  return sel;
}

std::vector<std::size_t> detect_incorrect(std::span<const double> ratios) {
  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] < 1.0) flagged.push_back(i);
  }
  std::stable_sort(flagged.begin(), flagged.end(),
                   [&](std::size_t a, std::size_t b) { return ratios[a] < ratios[b]; });
  flagged.resize(std::min(flagged.size(), ratios.size() / 2));
  return flagged;
}

ProposalPool build_pool(const Dataset& reference, const Dataset& linreg, const Dataset& current,
                        const CorruptionMask& mask, std::size_t n_perm, std::size_t max_pool,
                        SeededRng rng) {
  if (mask.empty()) throw std::invalid_argument("build_pool: empty mask");
  const Matrix ref = masked_block(reference.values(), mask);
  std::vector<Matrix> parts{ref, masked_block(linreg.values(), mask)};
  std::vector<ProposalSource> sources(static_cast<std::size_t>(ref.rows()), ProposalSource::kReference);
  sources.insert(sources.end(), linreg.rows(), ProposalSource::kLinReg);
  for (std::size_t p = 0; p < n_perm; ++p) {
    parts.push_back(permute_columns(ref, rng.derive(p)));
    sources.insert(sources.end(), reference.rows(), ProposalSource::kPermutation);
  }
  const std::size_t n_fixed = sources.size();

  std::vector<std::size_t> keep(n_fixed);
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (n_fixed + current.rows() > max_pool) {
    const std::size_t budget = max_pool > current.rows() ? max_pool - current.rows() : 0;
    auto sampler = rng.derive(n_perm);
    for (std::size_t i = 0; i < budget; ++i) {
      std::swap(keep[i], keep[i + sampler.uniform_index(n_fixed - i)]);
    }
    keep.resize(budget);
    std::sort(keep.begin(), keep.end());
  }

  ProposalPool pool;
  pool.blocks.resize(static_cast<Eigen::Index>(keep.size() + current.rows()), ref.cols());
  Eigen::Index out = 0;
  std::size_t part = 0, part_start = 0;
  for (auto idx : keep) {
    while (idx >= part_start + static_cast<std::size_t>(parts[part].rows())) {
      part_start += static_cast<std::size_t>(parts[part].rows());
      ++part;
    }
    pool.blocks.row(out++) = parts[part].row(static_cast<Eigen::Index>(idx - part_start));
    pool.sources.push_back(sources[idx]);
  }
  pool.blocks.bottomRows(static_cast<Eigen::Index>(current.rows())) = masked_block(current.values(), mask);
  pool.sources.insert(pool.sources.end(), current.rows(), ProposalSource::kCurrent);
  return pool;
}

std::size_t best_proposal(std::span<const double> row, const ProposalPool& pool,
                          const CorruptionMask& mask, const Discriminator& model) {
  if (pool.size() == 0) throw std::invalid_argument("best_proposal: empty pool");
  return best_by_tiles(row, pool, mask, model);
}

std::vector<std::size_t> best_proposals(const Matrix& rows, const ProposalPool& pool,
                                        const CorruptionMask& mask, const Discriminator& model) {
  if (pool.size() == 0) throw std::invalid_argument("best_proposal: empty pool");
  const auto n = static_cast<std::size_t>(rows.rows());
  std::vector<std::size_t> best(n, 0);
  const auto* boosted = model.boosted();
  if (boosted == nullptr) {
    parallel_for(n, [&](std::size_t i) {
      const auto r = rows.row(static_cast<Eigen::Index>(i));
      best[i] = best_by_tiles(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())),
                              pool, mask, model);
    });
    return best;
  }

  std::vector<int> block_pos(static_cast<std::size_t>(rows.cols()), -1);
  for (std::size_t j = 0; j < mask.size(); ++j) block_pos[mask.indices()[j]] = static_cast<int>(j);
  const std::size_t n_chunks = (n + kRowChunk - 1) / kRowChunk;
  const std::size_t n_pool = pool.size();
  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kRowChunk;
    const std::size_t end = std::min(n, begin + kRowChunk);
    std::vector<double> score;
    boosted_scores(*boosted, rows, begin, end, pool, block_pos, score);
    for (std::size_t r = begin; r < end; ++r) {
      const double* s = score.data() + (r - begin) * n_pool;
      double best_r = -1.0;
      for (std::size_t b = 0; b < n_pool; ++b) {
        const double ratio = likelihood_ratio(BoostedModel::proba_from_score(s[b]));
        if (ratio > best_r) {
          best_r = ratio;
          best[r] = b;
        }
      }
    }
  });
  return best;
}

CorrectReport correct(const Dataset& reference, const Dataset& query, const CorruptionMask& mask,
                      const CorrectConfig& config, SeededRng rng) {
  if (!reference.same_schema(query)) {
    throw std::invalid_argument("correct: reference and query schemas differ");
  }
  if (mask.empty()) throw std::invalid_argument("correct: empty mask");
  if (mask.indices().back() >= reference.cols() || mask.size() >= reference.cols()) {
    throw std::invalid_argument("correct: mask must leave at least one column in range");
  }
  if (config.folds < 2) throw std::invalid_argument("correct: need at least 2 folds");

  DiscriminatorConfig disc;
  disc.kind = ModelKind::kBoosted;
  disc.boosted = config.boosted;

  auto sel = select_initial(reference, query, mask, config, rng.derive(0));
  CorrectReport report;
  report.initial = sel.candidate.method;
  report.initial_scores = sel.scores;
  Dataset current = sel.candidate.values;
  double d_hat = sel.estimate.mean;

  const Matrix& x = reference.values();
  const std::size_t nx = reference.rows();
  const std::size_t ny = query.rows();

  for (std::size_t e = 0; e < config.epochs && d_hat >= config.epsilon; ++e) {
    auto erng = rng.derive(1 + e);
    const Matrix& y = current.values();
    const auto x_folds = kfold_indices(nx, config.folds, erng.derive(0));
    const auto y_folds = kfold_indices(ny, config.folds, erng.derive(1));
    Matrix aug;
    std::vector<Fold> aug_folds;
    if (config.augment) {
      aug = permute_columns(x, erng.derive(2));
      aug_folds = kfold_indices(nx, config.folds, erng.derive(3));
    }

    // Out-of-fold ratios for every query row, and the model that scored it.
    std::vector<Discriminator> models;
    std::vector<double> ratios(ny, 1.0);
    std::vector<std::size_t> fold_of(ny, 0);
    for (std::size_t f = 0; f < config.folds; ++f) {
      Matrix negatives = gather_rows(y, y_folds[f].train);
      if (config.augment) negatives = vstack(negatives, gather_rows(aug, aug_folds[f].train));
      models.push_back(fit_discriminator(gather_rows(x, x_folds[f].train), negatives, disc,
                                         erng.derive(10 + f)));
      const auto r = models.back().likelihood_ratio(gather_rows(y, y_folds[f].test));
      for (std::size_t i = 0; i < r.size(); ++i) {
        ratios[y_folds[f].test[i]] = r[i];
        fold_of[y_folds[f].test[i]] = f;
      }
    }

    const auto flagged = detect_incorrect(ratios);
    const auto pool = build_pool(reference, sel.linreg.values, current, mask, config.n_perm,
                                 config.max_pool, erng.derive(4));

    Matrix updated = y;
    std::size_t replaced = 0;
    for (std::size_t f = 0; f < config.folds; ++f) {
      std::vector<std::size_t> rows_f;
      for (auto i : flagged) {
        if (fold_of[i] == f) rows_f.push_back(i);
      }
      if (rows_f.empty()) continue;
      const auto picks = best_proposals(gather_rows(y, rows_f), pool, mask, models[f]);
      for (std::size_t k = 0; k < rows_f.size(); ++k) {
        const auto ri = static_cast<Eigen::Index>(rows_f[k]);
        bool changed = false;
        for (std::size_t j = 0; j < mask.size(); ++j) {
          const auto cj = static_cast<Eigen::Index>(mask.indices()[j]);
          const double v = pool.blocks(static_cast<Eigen::Index>(picks[k]), static_cast<Eigen::Index>(j));
          changed = changed || v != updated(ri, cj);
          updated(ri, cj) = v;
        }
        if (changed) ++replaced;
      }
    }

    CorrectEpoch epoch;
    epoch.d_hat_before = d_hat;
    epoch.flagged = flagged.size();
    epoch.replaced = replaced;
    Dataset candidate = current.with_values(std::move(updated));
    epoch.d_hat_after =
        estimate_tv(x, candidate.values(), disc, config.folds, erng.derive(5)).mean;
    if (epoch.d_hat_after > d_hat) {
      epoch.reverted = true;
      report.epochs.push_back(epoch);
      break;
    }
    current = std::move(candidate);
    d_hat = epoch.d_hat_after;
    report.epochs.push_back(epoch);
    if (epoch.d_hat_before - epoch.d_hat_after < config.min_improvement) break;
  }

  report.corrected = std::move(current);
  report.final_d_hat = d_hat;
  report.converged = d_hat < config.epsilon;
  return report;
}

}  // namespace datafix
