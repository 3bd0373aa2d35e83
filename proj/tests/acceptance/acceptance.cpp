// Acceptance runner. Each criterion prints one line:
//   criterion N: PASS|FAIL  <measurements>
// Usage: datafix_acceptance [--criterion N] [--cli PATH]

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Cholesky>

#include "../common/mst_oracle.hpp"
#include "../common/traces.hpp"
#include "datafix/correct.hpp"
#include "datafix/divergence.hpp"
#include "datafix/locate.hpp"
#include "datafix/manipulations.hpp"
#include "datafix/metrics.hpp"
#include "datafix/simulator.hpp"

namespace fs = std::filesystem;
using namespace datafix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

std::string fmt_sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

// Simulated pair exactly as the CLI produces it.
SimSample simulate(int id, std::uint64_t seed, std::size_t d = 100, std::size_t n_c = 20,
                   std::size_t rows = 2000) {
  const auto spec = build_spec(id, d, n_c, seed);
  return sample_pair(spec, rows, rows, SeededRng(seed, 1).derive(0));
}

Matrix background_reference(int id, std::uint64_t seed, std::size_t d = 100, std::size_t n_c = 20,
                            std::size_t rows = 2000) {
  const auto spec = build_spec(id, d, n_c, seed);
  return spec.p.sample(rows, SeededRng(seed, 1).derive(1));
}

LocateReport run_locate(const Dataset& x, const Dataset& y, std::uint64_t seed) {
  return locate(x, y, LocateConfig{}, SeededRng(seed, 3));
}

// 1. Per-fold estimate equals 2 BA - 1 on synthetic prediction/label sets.
Outcome criterion_tv_identity() {
  SeededRng rng(101);
  double worst = 0;
  for (int c = 0; c < 1000; ++c) {
    auto r = rng.derive(c);
    const std::size_t nx = 1 + r.uniform_index(300), ny = 1 + r.uniform_index(300);
    const double skill = r.uniform(-1.0, 3.0);
    std::vector<double> rx(nx), ry(ny);
    // Occasional exact ties at r = 1 exercise the tie convention.
    for (auto& v : rx) v = r.bernoulli(0.05) ? 1.0 : std::exp(r.normal(skill, 1.5));
    for (auto& v : ry) v = r.bernoulli(0.05) ? 1.0 : std::exp(r.normal(-skill, 1.5));
    std::size_t tn = 0, tp = 0;
    for (double v : rx) tn += v > 1.0;
    for (double v : ry) tp += v <= 1.0;
    const double ba = 0.5 * (double(tn) / double(nx) + double(tp) / double(ny));
    worst = std::max(worst, std::abs(tv_from_ratios(rx, ry) - (2 * ba - 1)));
  }
  return {worst <= 1e-12, "max |D - (2BA-1)| = " + fmt_sci(worst) + " over 1000 configurations"};
}

// 2. Monte-Carlo oracle: closed form in 1-D and invariance under exp / sigmoid.
Outcome criterion_oracle() {
  Eigen::VectorXd m0(1), m1(1);
  m0 << 0.0;
  m1 << 0.5;
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const auto p = Distribution::gaussian(Distribution::Transform::kNone, {1.0},
                                        {GaussianComponent::make(m0, one)});
  const auto q = Distribution::gaussian(Distribution::Transform::kNone, {1.0},
                                        {GaussianComponent::make(m1, one)});
  const auto tv = mc_tv_oracle(p, q, 1000000, SeededRng(202));
  bool pass = std::abs(tv.value - 0.1974) <= 0.01;
  std::string detail = "1-D TV " + fmt(tv.value) + " (SE " + fmt(tv.std_error, 5) + ")";

  // Pairs sharing kernel, mask and shift, differing only by the transform.
  // Sizes keep the TV away from 0 and 1.
  struct Pair {
    int a, b;
    std::size_t d, c;
  };
  const Pair pairs[] = {{3, 4, 5, 1}, {3, 6, 5, 1}, {5, 7, 20, 2}};
  for (auto [a, b, d, c] : pairs) {
    const auto sa = build_spec(a, d, c, 7), sb = build_spec(b, d, c, 7);
    const auto ta = mc_tv_oracle(sa.p, sa.q, 100000, SeededRng(203, a));
    const auto tb = mc_tv_oracle(sb.p, sb.q, 100000, SeededRng(203, b));
    const double bound = 2 * std::hypot(ta.std_error, tb.std_error);
    const bool ok = std::abs(ta.value - tb.value) <= bound;
    pass = pass && ok;
    detail += "; ids " + std::to_string(a) + "/" + std::to_string(b) + ": " + fmt(ta.value) + " vs " +
              fmt(tb.value) + " (bound " + fmt(bound) + ")";
  }
  return {pass, detail};
}

// 3. Localization on simulated datasets 1, 3 and 8.
Outcome criterion_locate_simulated() {
  const std::pair<int, double> targets[] = {{1, 0.90}, {3, 0.80}, {8, 0.50}};
  bool pass = true;
  std::string detail;
  for (auto [id, target] : targets) {
    const auto t0 = std::chrono::steady_clock::now();
    double sum = 0;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = simulate(id, seed);
      const auto report = run_locate(s.reference, s.query, seed);
      const double f1 = f1_localization(report.refined_mask, s.mask).f1;
      sum += f1;
      per_seed += (seed ? "," : "") + fmt(f1, 2);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double mean = sum / 5;
    pass = pass && mean >= target && secs < 600;
    detail += (detail.empty() ? "" : "; ") + std::string("id ") + std::to_string(id) + " mean F1 " +
              fmt(mean, 3) + " [" + per_seed + "] >= " + fmt(target, 2) + " in " + fmt(secs, 0) + "s";
  }
  return {pass, detail};
}

// 4. Refinement drops injected false-positive iterations past a plateau.
Outcome criterion_refine_tails() {
  int clean = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = test_support::make_plateau_trace(SeededRng(404, s));
    const auto r = refine(t.iterations, LocateConfig{});
    bool any = false;
    for (auto c : t.tail_columns) any |= std::binary_search(r.mask.begin(), r.mask.end(), c);
    clean += !any;
  }
  return {clean >= 18, std::to_string(clean) + "/20 instances exclude every injected column"};
}

bool unmasked_identical(const Dataset& a, const Dataset& b, const CorruptionMask& mask) {
  for (auto j : mask.complement(a.cols())) {
    if (!(a.values().col(j) == b.values().col(j))) return false;
  }
  return true;
}

// 5. Correction with the true mask on dataset 1.
Outcome criterion_correct() {
  const std::uint64_t seed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = simulate(1, seed);
  const auto report = correct(s.reference, s.query, s.mask, CorrectConfig{}, SeededRng(seed, 4));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Matrix x2 = background_reference(1, seed);
  const double raw = henze_penrose(s.reference.values(), report.corrected.values());
  const double bg = henze_penrose(s.reference.values(), x2);
  const double before = henze_penrose(s.reference.values(), s.query.values()) - bg;
  const bool same = unmasked_identical(report.corrected, s.query, s.mask);
  const bool pass = report.final_d_hat < 0.1 && raw - bg < 0.05 && same && secs < 1200;
  return {pass, "final D " + fmt(report.final_d_hat) + " (initial " + to_string(report.initial) +
                    ", " + std::to_string(report.epochs.size()) + " epochs); adjusted HP " +
                    fmt(raw - bg) + " (uncorrected " + fmt(before) + "); unmasked identical " +
                    (same ? "yes" : "no") + "; " + fmt(secs, 0) + "s"};
}

// 6. Locate, correct, then locate again on the corrected query.
Outcome criterion_end_to_end() {
  const std::uint64_t seed = 0;
  const auto s = simulate(1, seed);
  const auto first = run_locate(s.reference, s.query, seed);
  if (first.refined_mask.empty()) return {false, "first locate found no columns"};
  const auto fixed = correct(s.reference, s.query, first.refined_mask, CorrectConfig{},
                             SeededRng(seed, 4));
  const auto again = run_locate(s.reference, fixed.corrected, seed);
  const double d0 = again.initial_d_hat();
  const bool exit3 = again.refined_mask.empty() && d0 <= LocateConfig{}.epsilon;
  const bool pass = d0 <= 0.05 && again.refined_mask.empty() && exit3;
  return {pass, "first mask F1 " + fmt(f1_localization(first.refined_mask, s.mask).f1, 3) +
                    "; re-locate initial D " + fmt(d0) + ", refined mask size " +
                    std::to_string(again.refined_mask.size()) + ", exit " + (exit3 ? "3" : "0")};
}

// Fifty correlated latent pairs, exponentiated so that marginals are
// skewed, then min-max scaled over both halves and split in two.
// Gaussian random field on a side x side pixel grid (squared-exponential
// kernel, neighbour correlation ~0.8), exponentiated so marginals are skewed.
std::pair<Dataset, Dataset> gaussian_field_dataset(std::size_t side, std::size_t rows, SeededRng rng) {
  const auto d = static_cast<Eigen::Index>(side * side);
  const double length = 1.5;
  Eigen::MatrixXd cov(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      const double dr = double(a / Eigen::Index(side) - b / Eigen::Index(side));
      const double dc = double(a % Eigen::Index(side) - b % Eigen::Index(side));
      cov(a, b) = std::exp(-(dr * dr + dc * dc) / (2 * length * length));
    }
  }
  cov.diagonal().array() += 1e-8;
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  Matrix all(2 * rows, d);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < 2 * rows; ++i) {
    for (auto& v : z) v = rng.normal();
    all.row(static_cast<Eigen::Index>(i)) = (0.5 * (l * z)).array().exp().transpose();
  }
  const auto [norm, params] = normalize(Dataset::continuous(all));
  (void)params;
  const Matrix& v = norm.values();
  return {Dataset::continuous(v.topRows(rows)), Dataset::continuous(v.bottomRows(rows))};
}

// 7. Localization of manipulations applied to 25% of the columns.
Outcome criterion_manipulations() {
  const auto [x, y] = gaussian_field_dataset(10, 2000, SeededRng(707));
  const std::pair<const char*, double> targets[] = {{"1", 0.8}, {"2", 0.8}, {"5", 0.8}, {"3", 0.6}};
  bool pass = true;
  std::string detail;
  for (auto [code, target] : targets) {
    auto spec = parse_manipulation(code);
    spec.fraction = 0.25;
    const auto m = apply_manipulation(y, spec, SeededRng(708));
    const auto report = run_locate(x, m.data, 709);
    const double f1 = f1_localization(report.refined_mask, m.mask).f1;
    pass = pass && f1 >= target;
    detail += (detail.empty() ? "" : "; ") + std::string("type ") + code + " F1 " + fmt(f1, 3) +
              " >= " + fmt(target, 1);
  }
  return {pass, detail};
}

// 8. Null behaviour of the correction divergences and the MST oracle.
Outcome criterion_nulls() {
  int ok = 0;
  double worst_hp = 0, worst_kl = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SeededRng rng(808, seed);
    Matrix a(2000, 5), b(2000, 5);
    auto ra = rng.derive(0), rb = rng.derive(1);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = ra.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rb.normal();
    const double hp = henze_penrose(a, b), kl = symmetric_kl(a, b);
    worst_hp = std::max(worst_hp, std::abs(hp));
    worst_kl = std::max(worst_kl, std::abs(kl));
    ok += std::abs(hp) < 0.05 && std::abs(kl) < 0.1;
  }
  int exact = 0;
  SeededRng rng(809);
  for (int inst = 0; inst < 50; ++inst) {
    auto r = rng.derive(inst);
    const std::size_t nx = 10 + r.uniform_index(241), ny = 10 + r.uniform_index(241);
    const std::size_t d = 1 + r.uniform_index(6);
    const double shift = r.uniform(0.0, 2.0);
    Matrix a(nx, d), b(ny, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = r.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = r.normal() + shift;
    exact += cross_edge_count(a, b) == test_support::prim_cross_edges(a, b);
  }
  return {ok >= 9 && exact == 50,
          std::to_string(ok) + "/10 null seeds within bounds (max |HP| " + fmt(worst_hp) +
              ", max |sKL| " + fmt(worst_kl) + "); MST oracle exact on " + std::to_string(exact) +
              "/50"};
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Every subcommand twice with the same flags; all outputs must match.
Outcome criterion_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given (--cli)"};
  const fs::path root = fs::temp_directory_path() / "datafix_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> failures;
  int expected_exit_mismatch = 0;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    fs::create_directories(dir);
    auto p = [&](const char* name) { return (dir / name).string(); };
    const std::string pair = " --reference " + p("X.csv") + " --query " + p("Yc.csv");
    const std::vector<std::pair<std::string, int>> commands = {
        {"simulate --id 3 --features 20 --corrupted 4 --rows 400 --seed 5 --background --out " +
             dir.string(), 0},
        {"corrupt --input " + p("Y.csv") + " --type 3 --fraction 0.25 --seed 6 --out " + p("Yc.csv"), 0},
        {"locate" + pair + " --seed 7 --trees 40 --out " + p("locate.json") + " --svg " + p("curve.svg"), -1},
        {"correct" + pair + " --mask " + p("mask.json") + " --seed 8 --rounds 40 --out " +
             p("fixed.csv") + " --report " + p("fixed.json"), 0},
        {"correct" + pair + " --auto-locate --trees 40 --seed 8 --rounds 40 --out " + p("auto.csv") +
             " --report " + p("auto.json"), 0},
        {"evaluate --predicted " + p("Yc.mask.json") + " --truth " + p("mask.json") + " --reference " +
             p("X.csv") + " --query " + p("fixed.csv") + " --background " + p("X2.csv") +
             " --seed 9 --out " + p("scores.json"), 0}};
    for (const auto& [args, want] : commands) {
      const int code = shell(cli + " --threads 1 " + args);
      if ((want >= 0 && code != want) || (want < 0 && code != 0 && code != 3)) {
        ++expected_exit_mismatch;
        failures.push_back(args.substr(0, args.find(' ')) + " exit " + std::to_string(code));
      }
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "run0")) {
    const auto other = root / "run1" / entry.path().filename();
    ++compared;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
      failures.push_back(entry.path().filename().string() + " differs");
    }
  }
  std::string detail = std::to_string(compared) + " output files compared";
  for (const auto& f : failures) detail += "; " + f;
  fs::remove_all(root);
  return {failures.empty() && expected_exit_mismatch == 0 && compared >= 14, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("datafix acceptance criteria");
  int only = 0;
  std::string cli;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--cli", cli, "Path to the datafix executable");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {
      criterion_tv_identity,   criterion_oracle,          criterion_locate_simulated,
      criterion_refine_tails,  criterion_correct,         criterion_end_to_end,
      criterion_manipulations, criterion_nulls,           [&] { return criterion_determinism(cli); }};

  bool all = true;
  for (int c = 1; c <= 9; ++c) {
    if (only && c != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[c - 1]();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << c << ": " << (out.pass ? "PASS" : "FAIL") << "  " << out.detail
              << " [" << fmt(secs, 1) << "s]" << std::endl;
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
