#include "rsoinv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "rsoinv/error.hpp"

namespace rsoinv {

namespace {

void check_same_dims(const ImageGray& a, const ImageGray& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw_input("image dimensions differ");
}

std::vector<double> gaussian_window_1d(int side, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(side));
  const double c = (side - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < side; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable weighted sum over every fully-contained window ("valid" filtering).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t w, std::size_t h,
                                 const std::vector<double>& win) {
  const std::size_t s = win.size();
  const std::size_t ow = w - s + 1;
  const std::size_t oh = h - s + 1;
  std::vector<double> rows(ow * h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < s; ++i) acc += win[i] * img[y * w + x + i];
      rows[y * ow + x] = acc;
    }
  std::vector<double> out(ow * oh);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < s; ++i) acc += win[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mse(const ImageGray& a, const ImageGray& b) {
  check_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.pixels()[i]) - static_cast<double>(b.pixels()[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double m, double peak) {
  if (!(peak > 0.0)) throw_input("PSNR peak must be positive");
  if (m < 0.0 || !std::isfinite(m)) throw_input("MSE must be finite and >= 0");
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

double psnr(const ImageGray& a, const ImageGray& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

double ssim(const ImageGray& a, const ImageGray& b, const SsimParams& p) {
  check_same_dims(a, b);
  if (p.window_side < 1 || p.window_side % 2 == 0) throw_input("SSIM window side must be odd");
  const auto side = static_cast<std::size_t>(p.window_side);
  if (a.width() < side || a.height() < side) throw_input("image too small for SSIM window");

  const std::size_t w = a.width();
  const std::size_t h = a.height();
  std::vector<double> x(a.pixels().begin(), a.pixels().end());
  std::vector<double> y(b.pixels().begin(), b.pixels().end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto win = gaussian_window_1d(p.window_side, p.window_sigma);
  const auto mx = filter_valid(x, w, h, win);
  const auto my = filter_valid(y, w, h, win);
  const auto sxx = filter_valid(xx, w, h, win);
  const auto syy = filter_valid(yy, w, h, win);
  const auto sxy = filter_valid(xy, w, h, win);

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = std::max(sxx[i] - mx[i] * mx[i], 0.0);
    const double vy = std::max(syy[i] - my[i] * my[i], 0.0);
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return std::clamp(total / static_cast<double>(mx.size()), -1.0, 1.0);
}

MetricReport compare(const ImageGray& reference, const ImageGray& test, double peak) {
  MetricReport r;
  r.mse = mse(reference, test);
  r.psnr = psnr_from_mse(r.mse, peak);
  r.ssim = ssim(reference, test);
  r.peak = peak;
  return r;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw_input("quantile of an empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DistributionSummary summarize(std::span<const double> values, bool with_kde) {
  if (values.empty()) throw_input("cannot summarize an empty sample");
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
    throw_input("cannot summarize non-finite values");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());

  DistributionSummary s;
  s.count = sorted.size();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  s.std = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);

  if (with_kde) {
    // Silverman's rule of thumb; fall back to the standard deviation when the
    // IQR collapses, and to a unit-scale width for a constant sample.
    const double spread = std::min(s.std, (s.q3 - s.q1) / 1.34);
    double h = 0.9 * (spread > 0.0 ? spread : s.std) * std::pow(n, -0.2);
    if (!(h > 0.0)) h = 1e-3 * std::max(1.0, std::abs(s.mean));
    const double lo = s.min - 3.0 * h;
    const double hi = s.max + 3.0 * h;
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
    s.kde_points.reserve(kKdePoints);
    for (int i = 0; i < kKdePoints; ++i) {
      const double t = lo + (hi - lo) * i / (kKdePoints - 1);
      double acc = 0.0;
      for (double v : sorted) {
        const double z = (t - v) / h;
        acc += std::exp(-0.5 * z * z);
      }
      s.kde_points.emplace_back(t, acc * norm);
    }
  }
  return s;
}

}  // namespace rsoinv
