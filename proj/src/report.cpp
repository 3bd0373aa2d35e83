#include "datafix/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "datafix/io.hpp"

namespace datafix {

using nlohmann::json;

json to_json(const LocateReport& report) {
  json iterations = json::array();
  for (const auto& it : report.iterations) {
    iterations.push_back({{"removed_before", it.removed_before},
                          {"removed", it.removed},
                          {"d_hat", it.d_hat},
                          {"d_hat_raw", it.d_hat_raw},
                          {"per_fold", it.per_fold}});
  }
  json out = {{"version", kReportVersion},
              {"iterations", iterations},
              {"raw_mask", report.raw_mask.indices()},
              {"refined_mask", report.refined_mask.indices()},
              {"kept_iterations", report.kept_iterations},
              {"initial_d_hat", report.initial_d_hat()}};
  if (!report.curve.x.empty()) {
    out["curve"] = {{"x", report.curve.x},
                    {"raw", report.curve.raw},
                    {"smoothed", report.curve.smoothed},
                    {"processed", report.curve.processed},
                    {"window", report.curve.window},
                    {"knee_index", report.curve.knee_index}};
  }
  return out;
}

json to_json(const CorrectReport& report) {
  json epochs = json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"d_hat_before", e.d_hat_before},
                      {"d_hat_after", e.d_hat_after},
                      {"flagged", e.flagged},
                      {"replaced", e.replaced},
                      {"reverted", e.reverted}});
  }
  return {{"version", kReportVersion},
          {"initial", to_string(report.initial)},
          {"initial_scores",
           {{"knn", report.initial_scores[0]},
            {"linreg", report.initial_scores[1]},
            {"random", report.initial_scores[2]}}},
          {"epochs", epochs},
          {"final_d_hat", report.final_d_hat},
          {"converged", report.converged}};
}

json to_json(const LocalizationScore& score) {
  return {{"precision", score.precision}, {"recall", score.recall}, {"f1", score.f1}};
}

json to_json(const DivergenceScores& scores) {
  return {{"w2", scores.w2},
          {"henze_penrose", scores.henze_penrose},
          {"symmetric_kl", scores.symmetric_kl}};
}

json to_json(const CorrectionScore& score) {
  return {{"raw", to_json(score.raw)},
          {"background", to_json(score.background)},
          {"adjusted", to_json(score.adjusted)}};
}

json to_json(const SimSpec& spec, std::size_t rows) {
  return {{"version", kReportVersion},
          {"id", spec.id},
          {"family", to_string(spec.family)},
          {"features", spec.d},
          {"corrupted_count", spec.n_corrupted},
          {"rows", rows},
          {"kernel_scale", spec.kernel_scale},
          {"seed", spec.seed},
          {"corrupted", spec.corrupted}};
}

std::string render_curve_svg(const LocateReport& report) {
  constexpr double kWidth = 640, kHeight = 400, kMargin = 50;
  std::vector<double> xs, ys;
  for (const auto& it : report.iterations) {
    xs.push_back(static_cast<double>(it.removed_before));
    ys.push_back(it.d_hat);
  }
  const double x_max = std::max(1.0, xs.empty() ? 1.0 : xs.back());
  double y_max = 0.0;
  for (double y : ys) y_max = std::max(y_max, y);
  for (double y : report.curve.processed) y_max = std::max(y_max, y);
  y_max = std::max(y_max, 1e-3) * 1.05;
  auto px = [&](double x) { return kMargin + (kWidth - 2 * kMargin) * x / x_max; };
  auto py = [&](double y) { return kHeight - kMargin - (kHeight - 2 * kMargin) * y / y_max; };
  auto fmt = [](double v) { return io::format_double(std::round(v * 100.0) / 100.0); };
  auto polyline = [&](const std::vector<double>& x, const std::vector<double>& y,
                      const char* style) {
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) points += ' ';
      points += fmt(px(x[i])) + "," + fmt(py(y[i]));
    }
    return "  <polyline fill=\"none\" " + std::string(style) + " points=\"" + points + "\"/>\n";
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\">\n";
  svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "  <line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "  <text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">features removed</text>\n";
  svg << "  <text x=\"14\" y=\"" << kHeight / 2 << "\" font-size=\"13\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\" text-anchor=\"middle\">estimated TV</text>\n";
  svg << "  <text x=\"" << kMargin - 6 << "\" y=\"" << fmt(py(0.0))
      << "\" text-anchor=\"end\" font-size=\"11\">0</text>\n";
  svg << "  <text x=\"" << kMargin - 6 << "\" y=\"" << fmt(py(y_max))
      << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(y_max) << "</text>\n";
  svg << "  <text x=\"" << fmt(px(x_max)) << "\" y=\"" << kHeight - kMargin + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(x_max) << "</text>\n";
  if (!xs.empty()) svg << polyline(xs, ys, "stroke=\"#1f77b4\" stroke-width=\"2\"");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "  <circle cx=\"" << fmt(px(xs[i])) << "\" cy=\"" << fmt(py(ys[i]))
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  const auto& curve = report.curve;
  if (!curve.x.empty()) {
    svg << polyline(curve.x, curve.processed,
                    "stroke=\"#ff7f0e\" stroke-width=\"1.5\" stroke-dasharray=\"5,3\"");
    const double kx = curve.x[curve.knee_index];
    svg << "  <line x1=\"" << fmt(px(kx)) << "\" y1=\"" << kMargin << "\" x2=\"" << fmt(px(kx))
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"#d62728\" stroke-dasharray=\"2,2\"/>\n";
    svg << "  <text x=\"" << fmt(px(kx) + 4) << "\" y=\"" << kMargin + 12
        << "\" font-size=\"11\" fill=\"#d62728\">knee</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace datafix
