#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "datafix/locate.hpp"

namespace datafix {
namespace {

// Least-squares polynomial through window points at local positions
// 0..w-1, evaluated at `at`. Positions are centered for conditioning.
std::vector<double> poly_fit_eval(std::span<const double> values, int polyorder,
                                  std::span<const double> at) {
  const auto w = static_cast<Eigen::Index>(values.size());
  const double center = 0.5 * static_cast<double>(w - 1);
  Eigen::MatrixXd a(w, polyorder + 1);
  Eigen::VectorXd b(w);
  for (Eigen::Index i = 0; i < w; ++i) {
    const double t = static_cast<double>(i) - center;
    double p = 1.0;
    for (int k = 0; k <= polyorder; ++k) {
      a(i, k) = p;
      p *= t;
    }
    b(i) = values[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  std::vector<double> out;
  out.reserve(at.size());
  for (double pos : at) {
    const double t = pos - center;
    double v = 0.0;
    for (int k = polyorder; k >= 0; --k) v = v * t + coef(k);
    out.push_back(v);
  }
  return out;
}

// Local extrema in the argrelextrema(order=1, mode="clip") sense.
template <typename Cmp>
std::vector<std::size_t> relative_extrema(const std::vector<double>& v, Cmp cmp) {
  std::vector<std::size_t> out;
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 < n ? i + 1 : n - 1;
    if (cmp(v[i], v[lo]) && cmp(v[i], v[hi])) out.push_back(i);
  }
  return out;
}

std::vector<double> normalized(std::span<const double> a) {
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  const double span = *hi - *lo;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - *lo) / span;
  return out;
}

}  // namespace

std::vector<double> savitzky_golay(std::span<const double> y, std::size_t window, int polyorder) {
  if (window % 2 == 0) throw std::invalid_argument("savitzky_golay: window must be odd");
  if (polyorder < 0 || static_cast<std::size_t>(polyorder) >= window) {
    throw std::invalid_argument("savitzky_golay: polyorder must be less than window");
  }
  if (y.empty()) return {};

  const std::size_t n = y.size();
  std::vector<double> padded(y.begin(), y.end());
  std::size_t offset = 0;
  if (n < window) {
    const std::size_t extra = window - n;
    offset = extra / 2;
    padded.assign(offset, y.front());
    padded.insert(padded.end(), y.begin(), y.end());
    padded.insert(padded.end(), extra - offset, y.back());
  }
  const std::size_t m = padded.size();
  const std::size_t half = window / 2;

  // Convolution weights for the window centre.
  std::vector<double> weights(window);
  {
    std::vector<double> unit(window, 0.0);
    const double mid = static_cast<double>(half);
    for (std::size_t k = 0; k < window; ++k) {
      unit[k] = 1.0;
      weights[k] = poly_fit_eval(unit, polyorder, std::span<const double>(&mid, 1))[0];
      unit[k] = 0.0;
    }
  }

  std::vector<double> out(m);
  for (std::size_t i = half; i + half < m; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += weights[k] * padded[i - half + k];
    out[i] = s;
  }
  std::vector<double> head(half), tail(half);
  std::iota(head.begin(), head.end(), 0.0);
  std::iota(tail.begin(), tail.end(), static_cast<double>(window - half));
  const auto first = poly_fit_eval(std::span<const double>(padded.data(), window), polyorder, head);
  const auto last =
      poly_fit_eval(std::span<const double>(padded.data() + m - window, window), polyorder, tail);
  for (std::size_t k = 0; k < half; ++k) {
    out[k] = first[k];
    out[m - half + k] = last[k];
  }
  return {out.begin() + static_cast<std::ptrdiff_t>(offset),
          out.begin() + static_cast<std::ptrdiff_t>(offset + n)};
}

std::vector<double> enforce_nonincreasing(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n == 0) return {};
  auto at = [n](const std::vector<double>& v, std::ptrdiff_t i) {
    return v[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1))];
  };
  const std::vector<double> src(y.begin(), y.end());
  std::vector<double> eroded(n), opened(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    eroded[i] = std::min({at(src, k - 1), src[i], at(src, k + 1)});
  }
  // Erosion of the edge-replicated signal just outside the ends equals the
  // end value itself, so monotone curves pass through unchanged.
  auto eroded_at = [&](std::ptrdiff_t i) {
    if (i < 0) return src.front();
    if (i >= static_cast<std::ptrdiff_t>(n)) return src.back();
    return eroded[static_cast<std::size_t>(i)];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    opened[i] = std::max({eroded_at(k - 1), eroded[i], eroded_at(k + 1)});
  }
  for (std::size_t i = 1; i < n; ++i) opened[i] = std::min(opened[i], opened[i - 1]);
  return opened;
}

std::size_t find_knee(std::span<const double> x, std::span<const double> y, double sensitivity) {
  if (x.size() != y.size()) throw std::invalid_argument("find_knee: x and y lengths differ");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("find_knee: need at least 3 points");
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  if (!(*xhi > *xlo)) throw std::invalid_argument("find_knee: x has no range");
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  if (!(*yhi > *ylo)) return 0;

  const auto xn = normalized(x);
  auto yn = normalized(y);
  const double ymax = *std::max_element(yn.begin(), yn.end());
  for (auto& v : yn) v = ymax - v;
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = yn[i] - xn[i];

  // Only maxima where the curve lies below its chord can mark an elbow; a
  // concave stretch (including the clipped endpoint at 0) never does.
  auto maxima = relative_extrema(diff, std::greater_equal<double>());
  std::erase_if(maxima, [&](std::size_t i) { return !(diff[i] > 0.0); });
  const auto minima = relative_extrema(diff, std::less_equal<double>());
  if (maxima.empty()) return n - 1;

  const double mean_step = std::abs((xn.back() - xn.front()) / static_cast<double>(n - 1));
  auto is_in = [](const std::vector<std::size_t>& v, std::size_t i) {
    return std::binary_search(v.begin(), v.end(), i);
  };

  double threshold = 0.0;
  std::size_t threshold_index = 0;
  bool active = true;
  for (std::size_t i = maxima.front(); i + 1 < n; ++i) {
    if (is_in(maxima, i)) {
      threshold = diff[i] - sensitivity * mean_step;
      threshold_index = i;
      active = true;
    }
    if (is_in(minima, i)) {
      threshold = 0.0;
      active = false;
    }
    if (active && diff[i + 1] < threshold) return threshold_index;
  }
  return n - 1;
}

std::size_t refinement_window(double zeta, double mean_removed_per_iteration) {
  const auto half = static_cast<std::size_t>(std::floor(zeta * mean_removed_per_iteration / 2.0));
  return std::max<std::size_t>(5, 2 * half + 1);
}

RefineResult refine(const std::vector<LocateIteration>& iterations, const LocateConfig& config) {
  RefineResult result;
  std::size_t removing = 0, total = 0;
  for (const auto& it : iterations) {
    if (!it.removed.empty()) {
      ++removing;
      total += it.removed.size();
    }
  }
  auto union_of = [&](std::size_t count) {
    std::vector<std::size_t> mask;
    for (std::size_t j = 0; j < count && j < iterations.size(); ++j) {
      mask.insert(mask.end(), iterations[j].removed.begin(), iterations[j].removed.end());
    }
    std::sort(mask.begin(), mask.end());
    return mask;
  };
  result.kept_iterations = iterations.size();
  if (removing < 2 || total < 3) {
    result.mask = union_of(iterations.size());
    return result;
  }

  // Vertices (columns removed so far, divergence) of the removal curve,
  // resampled at every integer count.
  std::vector<double> vx, vy;
  for (const auto& it : iterations) {
    vx.push_back(static_cast<double>(it.removed_before));
    vy.push_back(it.d_hat);
  }
  auto& curve = result.curve;
  const double last_x = vx.back();
  std::size_t seg = 0;
  for (std::size_t k = 0; static_cast<double>(k) <= last_x; ++k) {
    const double xk = static_cast<double>(k);
    while (seg + 1 < vx.size() - 1 && vx[seg + 1] < xk) ++seg;
    double yk = vy[seg];
    if (seg + 1 < vx.size() && vx[seg + 1] > vx[seg]) {
      const double t = std::clamp((xk - vx[seg]) / (vx[seg + 1] - vx[seg]), 0.0, 1.0);
      yk = vy[seg] + t * (vy[seg + 1] - vy[seg]);
    }
    curve.x.push_back(xk);
    curve.raw.push_back(yk);
  }

  curve.window = refinement_window(config.zeta,
                                   static_cast<double>(total) / static_cast<double>(removing));
  curve.smoothed = savitzky_golay(curve.raw, curve.window, config.polyorder);
  curve.processed = enforce_nonincreasing(curve.smoothed);
  curve.knee_index = find_knee(curve.x, curve.processed, config.sensitivity);

  // Snap the knee to the nearest evaluated state; ties go to the later one.
  const double knee_x = curve.x[curve.knee_index];
  std::size_t best = 0;
  double best_dist = std::abs(vx[0] - knee_x);
  for (std::size_t m = 1; m < vx.size(); ++m) {
    const double dist = std::abs(vx[m] - knee_x);
    if (dist <= best_dist) {
      best = m;
      best_dist = dist;
    }
  }
  result.kept_iterations = best;
  result.mask = union_of(best);
  return result;
}

}  // namespace datafix
