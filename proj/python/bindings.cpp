#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "datafix/correct.hpp"
#include "datafix/divergence.hpp"
#include "datafix/locate.hpp"
#include "datafix/manipulations.hpp"
#include "datafix/metrics.hpp"
#include "datafix/parallel.hpp"
#include "datafix/report.hpp"
#include "datafix/simulator.hpp"

namespace py = pybind11;
using namespace datafix;

namespace {

using Kinds = std::optional<std::vector<std::string>>;

Dataset make_dataset(const Matrix& values, const Kinds& kinds) {
  std::vector<FeatureKind> k(static_cast<std::size_t>(values.cols()), FeatureKind::kContinuous);
  if (kinds) {
    if (kinds->size() != k.size()) throw std::invalid_argument("kinds must have one entry per column");
    for (std::size_t j = 0; j < k.size(); ++j) k[j] = parse_feature_kind((*kinds)[j]);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < k.size(); ++j) names.push_back("f" + std::to_string(j));
  return Dataset(values, std::move(k), std::move(names));
}

std::vector<std::string> kind_names(const Dataset& ds) {
  std::vector<std::string> out;
  for (auto k : ds.kinds()) out.push_back(to_string(k));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the datafix package. Reports are returned as JSON strings.";

  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.def("num_threads", &num_threads);

  m.def(
      "estimate_tv",
      [](const Matrix& reference, const Matrix& query, const std::string& model, std::size_t folds,
         std::uint64_t seed) {
        DiscriminatorConfig cfg;
        if (model == "forest") {
          cfg.kind = ModelKind::kForest;
        } else if (model == "boosted") {
          cfg.kind = ModelKind::kBoosted;
        } else {
          throw std::invalid_argument("model must be 'forest' or 'boosted'");
        }
        const auto est = estimate_tv(reference, query, cfg, folds, SeededRng(seed));
        return py::make_tuple(est.mean, est.per_fold, est.importances);
      },
      py::arg("reference"), py::arg("query"), py::arg("model") = "forest", py::arg("folds") = 5,
      py::arg("seed") = 0);

  m.def(
      "locate",
      [](const Matrix& reference, const Matrix& query, const Kinds& kinds, std::uint64_t seed,
         double tau, double epsilon, std::size_t folds, std::size_t n_trees, bool refine) {
        LocateConfig cfg;
        cfg.tau = tau;
        cfg.epsilon = epsilon;
        cfg.folds = folds;
        cfg.forest.n_trees = n_trees;
        cfg.refine = refine;
        const auto report =
            locate(make_dataset(reference, kinds), make_dataset(query, kinds), cfg, SeededRng(seed));
        return to_json(report).dump();
      },
      py::arg("reference"), py::arg("query"), py::arg("kinds") = py::none(), py::arg("seed") = 0,
      py::arg("tau") = 0.1, py::arg("epsilon") = 0.02, py::arg("folds") = 5,
      py::arg("n_trees") = 100, py::arg("refine") = true, py::call_guard<py::gil_scoped_release>());

  m.def(
      "correct",
      [](const Matrix& reference, const Matrix& query, const std::vector<std::size_t>& mask,
         const Kinds& kinds, std::uint64_t seed, double epsilon, std::size_t epochs) {
        CorrectConfig cfg;
        cfg.epsilon = epsilon;
        cfg.epochs = epochs;
        const auto x = make_dataset(reference, kinds);
        const auto report = correct(x, make_dataset(query, kinds), CorruptionMask(mask, x.cols()),
                                    cfg, SeededRng(seed));
        return std::make_pair(report.corrected.values(), to_json(report).dump());
      },
      py::arg("reference"), py::arg("query"), py::arg("mask"), py::arg("kinds") = py::none(),
      py::arg("seed") = 0, py::arg("epsilon") = 0.1, py::arg("epochs") = 2,
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "simulate",
      [](int id, std::size_t features, std::size_t corrupted, std::size_t rows, std::uint64_t seed) {
        const auto spec = build_spec(id, features, corrupted, seed);
        const auto s = sample_pair(spec, rows, rows, SeededRng(seed, 1).derive(0));
        return py::make_tuple(s.reference.values(), s.query.values(), s.mask.indices(),
                              kind_names(s.reference));
      },
      py::arg("id"), py::arg("features") = 100, py::arg("corrupted") = 20, py::arg("rows") = 2000,
      py::arg("seed") = 0);

  m.def(
      "mc_tv_oracle",
      [](int id, std::size_t features, std::size_t corrupted, std::size_t n_mc, std::uint64_t seed) {
        const auto spec = build_spec(id, features, corrupted, seed);
        const auto tv = mc_tv_oracle(spec.p, spec.q, n_mc, SeededRng(seed, 2));
        return py::make_tuple(tv.value, tv.std_error);
      },
      py::arg("id"), py::arg("features") = 100, py::arg("corrupted") = 20,
      py::arg("n_mc") = 100000, py::arg("seed") = 0);

  m.def(
      "corrupt",
      [](const Matrix& query, const std::string& type, double fraction, const Kinds& kinds,
         std::optional<Matrix> reference, std::optional<double> alpha, std::optional<double> rho,
         std::uint64_t seed) {
        auto spec = parse_manipulation(type);
        spec.fraction = fraction;
        if (alpha) spec.alpha = *alpha;
        if (rho) spec.rho = *rho;
        std::optional<Dataset> ref;
        if (reference) ref = make_dataset(*reference, kinds);
        const auto r = apply_manipulation(make_dataset(query, kinds), spec, SeededRng(seed), ref);
        return std::make_pair(r.data.values(), r.mask.indices());
      },
      py::arg("query"), py::arg("type"), py::arg("fraction") = 0.1, py::arg("kinds") = py::none(),
      py::arg("reference") = py::none(), py::arg("alpha") = py::none(),
      py::arg("rho") = py::none(), py::arg("seed") = 0);

  m.def(
      "f1_localization",
      [](const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth) {
        const auto s = f1_localization(predicted, truth);
        return py::make_tuple(s.precision, s.recall, s.f1);
      },
      py::arg("predicted"), py::arg("truth"));

  m.def("henze_penrose", &henze_penrose, py::arg("x"), py::arg("y"));
  m.def("symmetric_kl", &symmetric_kl, py::arg("x"), py::arg("y"), py::arg("k") = 1);
  m.def(
      "wasserstein2",
      [](const Matrix& x, const Matrix& y, std::uint64_t seed) {
        return wasserstein2(x, y, SinkhornConfig{}, SeededRng(seed));
      },
      py::arg("x"), py::arg("y"), py::arg("seed") = 0);

  m.def(
      "feature_removal_policy",
      [](const std::vector<double>& beta, double d_hat, double tau) {
        return feature_removal_policy(beta, d_hat, tau);
      },
      py::arg("beta"), py::arg("d_hat"), py::arg("tau"));
  m.def(
      "savitzky_golay",
      [](const std::vector<double>& y, std::size_t window, int polyorder) {
        return savitzky_golay(y, window, polyorder);
      },
      py::arg("y"), py::arg("window"), py::arg("polyorder"));
  m.def(
      "enforce_nonincreasing",
      [](const std::vector<double>& y) { return enforce_nonincreasing(y); }, py::arg("y"));
  m.def(
      "find_knee",
      [](const std::vector<double>& x, const std::vector<double>& y, double sensitivity) {
        return find_knee(x, y, sensitivity);
      },
      py::arg("x"), py::arg("y"), py::arg("sensitivity") = 5.0);
}
