// datafix: command line front end for simulation, corruption, shift
// localization, correction and evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "datafix/correct.hpp"
#include "datafix/io.hpp"
#include "datafix/locate.hpp"
#include "datafix/manipulations.hpp"
#include "datafix/metrics.hpp"
#include "datafix/parallel.hpp"
#include "datafix/report.hpp"
#include "datafix/simulator.hpp"

namespace fs = std::filesystem;
using namespace datafix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;
constexpr int kExitNoShift = 3;

void write_json(const fs::path& path, const nlohmann::json& j) { io::write_text(path, j.dump(2) + "\n"); }

void write_dataset(const fs::path& path, const Dataset& ds) {
  io::write_csv(path, ds);
  bool categorical = false;
  for (auto k : ds.kinds()) categorical = categorical || k == FeatureKind::kCategorical;
  if (categorical) io::write_kinds(io::kinds_sidecar_path(path), ds.kinds());
}

struct SimulateArgs {
  int id = 1;
  std::size_t features = 100;
  std::size_t corrupted = 20;
  std::size_t rows = 2000;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool background = false;
};

int run_simulate(const SimulateArgs& a) {
  const SimSpec spec = build_spec(a.id, a.features, a.corrupted, a.seed);
  SeededRng rng(a.seed, 1);
  const auto sample = sample_pair(spec, a.rows, a.rows, rng.derive(0));
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_dataset(dir / "X.csv", sample.reference);
  write_dataset(dir / "Y.csv", sample.query);
  io::write_mask(dir / "mask.json", sample.mask.indices());
  write_json(dir / "spec.json", to_json(spec, a.rows));
  if (a.background) {
    const Dataset x2 = sample.reference.with_values(spec.p.sample(a.rows, rng.derive(1)));
    write_dataset(dir / "X2.csv", x2);
  }
  return kExitOk;
}

struct CorruptArgs {
  std::string input;
  std::string reference;
  std::string type = "1";
  double fraction = 0.1;
  std::optional<double> alpha;
  std::optional<double> rho;
  std::uint64_t seed = 0;
  std::string out;
  std::string mask_out;
};

int run_corrupt(const CorruptArgs& a) {
  ManipulationSpec spec = parse_manipulation(a.type);
  spec.fraction = a.fraction;
  if (a.alpha) spec.alpha = *a.alpha;
  if (a.rho) spec.rho = *a.rho;
  const Dataset query = io::read_csv(a.input);
  std::optional<Dataset> reference;
  if (!a.reference.empty()) reference = io::read_csv(a.reference);
  const auto result = apply_manipulation(query, spec, SeededRng(a.seed, 2), reference);
  write_dataset(a.out, result.data);
  const fs::path mask_path = a.mask_out.empty() ? fs::path(a.out).replace_extension(".mask.json")
                                                : fs::path(a.mask_out);
  io::write_mask(mask_path, result.mask.indices());
  return kExitOk;
}

struct LocateArgs {
  std::string reference;
  std::string query;
  std::uint64_t seed = 0;
  LocateConfig config;
  std::size_t trees = 100;
  std::string out = "locate.json";
  std::string svg;
  bool no_refine = false;
};

void check_pair(const Dataset& x, const Dataset& y) {
  if (!x.same_schema(y)) throw std::invalid_argument("reference and query have different columns or kinds");
}

LocateReport do_locate(const Dataset& x, const Dataset& y, const LocateArgs& a) {
  auto cfg = a.config;
  cfg.forest.n_trees = a.trees;
  cfg.refine = !a.no_refine;
  return locate(x, y, cfg, SeededRng(a.seed, 3));
}

int run_locate(const LocateArgs& a) {
  const Dataset x = io::read_csv(a.reference);
  const Dataset y = io::read_csv(a.query);
  check_pair(x, y);
  const auto report = do_locate(x, y, a);
  auto j = to_json(report);
  const bool no_shift = report.refined_mask.empty() && report.initial_d_hat() <= a.config.epsilon;
  j["shift_detected"] = !no_shift;
  write_json(a.out, j);
  if (!a.svg.empty()) io::write_text(a.svg, render_curve_svg(report));
  return no_shift ? kExitNoShift : kExitOk;
}

struct CorrectArgs {
  std::string reference;
  std::string query;
  std::string mask;
  bool auto_locate = false;
  std::uint64_t seed = 0;
  CorrectConfig config;
  LocateArgs locate;
  std::string out = "corrected.csv";
  std::string report = "correct.json";
};

int run_correct(const CorrectArgs& a) {
  const Dataset x = io::read_csv(a.reference);
  const Dataset y = io::read_csv(a.query);
  check_pair(x, y);
  nlohmann::json j;
  std::vector<std::size_t> indices;
  if (!a.mask.empty()) {
    indices = io::read_mask(a.mask);
  } else if (a.auto_locate) {
    auto located = do_locate(x, y, a.locate);
    indices = located.refined_mask.indices();
    j["locate"] = to_json(located);
  } else {
    throw std::invalid_argument("correct needs --mask or --auto-locate");
  }
  if (2 * indices.size() > x.cols()) {
    throw std::invalid_argument("mask covers more than half of the columns");
  }
  if (indices.empty()) {
    // Nothing to correct: the query is passed through unchanged.
    write_dataset(a.out, y);
    j.update(nlohmann::json{{"version", kReportVersion}, {"mask", indices}, {"corrected", false}});
    write_json(a.report, j);
    return kExitOk;
  }
  const CorruptionMask mask(indices, x.cols());
  const auto report = correct(x, y, mask, a.config, SeededRng(a.seed, 4));
  write_dataset(a.out, report.corrected);
  j.update(to_json(report));
  j["mask"] = indices;
  j["corrected"] = true;
  write_json(a.report, j);
  return kExitOk;
}

struct EvaluateArgs {
  std::string predicted;
  std::string truth;
  std::string reference;
  std::string query;
  std::string background;
  std::uint64_t seed = 0;
  MetricsConfig config;
  std::string out = "scores.json";
};

int run_evaluate(const EvaluateArgs& a) {
  nlohmann::json j = {{"version", kReportVersion}};
  if (!a.predicted.empty() || !a.truth.empty()) {
    if (a.predicted.empty() || a.truth.empty()) {
      throw std::invalid_argument("--predicted and --truth must be given together");
    }
    j["localization"] = to_json(f1_localization(io::read_mask(a.predicted), io::read_mask(a.truth)));
  }
  if (!a.reference.empty() || !a.query.empty()) {
    if (a.reference.empty() || a.query.empty()) {
      throw std::invalid_argument("--reference and --query must be given together");
    }
    const Dataset x = io::read_csv(a.reference);
    const Dataset y = io::read_csv(a.query);
    check_pair(x, y);
    SeededRng rng(a.seed, 5);
    const auto raw = correction_divergences(x.values(), y.values(), a.config, rng.derive(0));
    if (a.background.empty()) {
      j["divergence"] = {{"raw", to_json(raw)}};
    } else {
      const Dataset b = io::read_csv(a.background);
      check_pair(x, b);
      const auto bg = correction_divergences(x.values(), b.values(), a.config, rng.derive(1));
      j["divergence"] = to_json(background_adjusted(raw, bg));
    }
  } else if (!a.background.empty()) {
    throw std::invalid_argument("--background needs --reference and --query");
  }
  if (j.size() == 1) throw std::invalid_argument("nothing to evaluate");
  write_json(a.out, j);
  return kExitOk;
}

void add_locate_options(CLI::App* cmd, LocateArgs& a) {
  cmd->add_option("--tau", a.config.tau, "Importance share per iteration (times the estimate)")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  cmd->add_option("--locate-epsilon", a.config.epsilon, "Stop once the estimate is at or below this")
      ->capture_default_str();
  cmd->add_option("--locate-folds", a.config.folds, "Cross-validation folds")
      ->check(CLI::Range(2, 100))
      ->capture_default_str();
  cmd->add_option("--trees", a.trees, "Random forest size")->check(CLI::Range(1, 100000))->capture_default_str();
  cmd->add_flag("--no-refine", a.no_refine, "Skip knee-based refinement");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature shift localization and correction for tabular data"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: DATAFIX_THREADS or all cores)")
      ->check(CLI::Range(1, 4096));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a reference/query pair from a simulated dataset");
  simulate->add_option("--id", sim.id, "Dataset id (1-15)")->required();
  simulate->add_option("--features", sim.features, "Number of columns")->capture_default_str();
  simulate->add_option("--corrupted", sim.corrupted, "Number of shifted columns")->capture_default_str();
  simulate->add_option("--rows", sim.rows, "Rows per dataset")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate->add_flag("--background", sim.background, "Also write a second reference sample X2.csv");

  CorruptArgs cor;
  auto* corrupt = app.add_subcommand("corrupt", "Apply a manipulation to a fraction of the columns");
  corrupt->add_option("--input", cor.input, "Clean query CSV")->required()->check(CLI::ExistingFile);
  corrupt->add_option("--reference", cor.reference, "Reference CSV (types 9 and 10)")->check(CLI::ExistingFile);
  corrupt->add_option("--type", cor.type, "Manipulation: 1, 2, 3, 4.1-4.3, 5, 6.1-6.3, 7, 8, 9, 10")->required();
  corrupt->add_option("--fraction", cor.fraction, "Share of eligible columns")->capture_default_str();
  corrupt->add_option("--alpha", cor.alpha, "Noise amplitude for type 4");
  corrupt->add_option("--rho", cor.rho, "Flip probability for type 6");
  corrupt->add_option("--seed", cor.seed, "Random seed")->capture_default_str();
  corrupt->add_option("--out", cor.out, "Corrupted CSV")->required();
  corrupt->add_option("--mask-out", cor.mask_out, "Mask JSON (default: <out>.mask.json)");

  LocateArgs loc;
  auto* loc_cmd = app.add_subcommand("locate", "Find the shifted columns of a query");
  loc_cmd->add_option("--reference", loc.reference, "Reference CSV")->required()->check(CLI::ExistingFile);
  loc_cmd->add_option("--query", loc.query, "Query CSV")->required()->check(CLI::ExistingFile);
  loc_cmd->add_option("--seed", loc.seed, "Random seed")->capture_default_str();
  loc_cmd->add_option("--out", loc.out, "Report JSON")->capture_default_str();
  loc_cmd->add_option("--svg", loc.svg, "Write the divergence curve as SVG");
  add_locate_options(loc_cmd, loc);

  CorrectArgs corr;
  auto* corr_cmd = app.add_subcommand("correct", "Rewrite the shifted columns of a query");
  corr_cmd->add_option("--reference", corr.reference, "Reference CSV")->required()->check(CLI::ExistingFile);
  corr_cmd->add_option("--query", corr.query, "Query CSV")->required()->check(CLI::ExistingFile);
  auto* mask_opt = corr_cmd->add_option("--mask", corr.mask, "Mask JSON")->check(CLI::ExistingFile);
  corr_cmd->add_flag("--auto-locate", corr.auto_locate, "Locate the mask first")->excludes(mask_opt);
  corr_cmd->add_option("--seed", corr.seed, "Random seed")->capture_default_str();
  corr_cmd->add_option("--correct-epsilon", corr.config.epsilon, "Stop once the estimate is below this")
      ->capture_default_str();
  corr_cmd->add_option("--epochs", corr.config.epochs, "Correction epochs")->capture_default_str();
  corr_cmd->add_option("--folds", corr.config.folds, "Cross-validation folds")
      ->check(CLI::Range(2, 100))
      ->capture_default_str();
  corr_cmd->add_option("--rounds", corr.config.boosted.n_rounds, "Boosting rounds")->capture_default_str();
  corr_cmd->add_option("--out", corr.out, "Corrected CSV")->capture_default_str();
  corr_cmd->add_option("--report", corr.report, "Report JSON")->capture_default_str();
  add_locate_options(corr_cmd, corr.locate);

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Score a localization and/or a correction");
  ev_cmd->add_option("--predicted", ev.predicted, "Predicted mask JSON")->check(CLI::ExistingFile);
  ev_cmd->add_option("--truth", ev.truth, "True mask JSON")->check(CLI::ExistingFile);
  ev_cmd->add_option("--reference", ev.reference, "Reference CSV")->check(CLI::ExistingFile);
  ev_cmd->add_option("--query", ev.query, "Query (corrected) CSV")->check(CLI::ExistingFile);
  ev_cmd->add_option("--background", ev.background,
                     "Clean counterpart compared with the reference for background subtraction")
      ->check(CLI::ExistingFile);
  ev_cmd->add_option("--seed", ev.seed, "Random seed")->capture_default_str();
  ev_cmd->add_option("--kl-neighbors", ev.config.kl_neighbors, "k for the KL estimator")->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "Scores JSON")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }
  if (threads > 0) set_num_threads(threads);
  corr.locate.seed = corr.seed;

  try {
    if (*simulate) return run_simulate(sim);
    if (*corrupt) return run_corrupt(cor);
    if (*loc_cmd) return run_locate(loc);
    if (*corr_cmd) return run_correct(corr);
    if (*ev_cmd) return run_evaluate(ev);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
