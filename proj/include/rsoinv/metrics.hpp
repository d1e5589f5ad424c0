#pragma once

#include <span>
#include <utility>
#include <vector>

#include "rsoinv/image.hpp"

namespace rsoinv {

struct MetricReport {
  double mse = 0.0;
  double psnr = 0.0;  // +inf when mse == 0
  double ssim = 0.0;
  double peak = 1.0;
};

struct SsimParams {
  double window_sigma = 1.5;
  int window_side = 11;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

double mse(const ImageGray& a, const ImageGray& b);
/// 10 log10(peak^2 / mse); returns +infinity for identical images.
double psnr(const ImageGray& a, const ImageGray& b, double peak = 1.0);
double psnr_from_mse(double mse, double peak);
/// Single-scale SSIM with a Gaussian window, averaged over window positions
/// that lie fully inside the image. Requires both sides >= window_side.
double ssim(const ImageGray& a, const ImageGray& b, const SsimParams& params = {});

MetricReport compare(const ImageGray& reference, const ImageGray& test, double peak = 1.0);

struct DistributionSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<std::pair<double, double>> kde_points;  // (value, density)
};

inline constexpr int kKdePoints = 128;

/// Quartiles by linear interpolation between order statistics (position
/// p * (n - 1)). With with_kde, adds a Gaussian KDE (Silverman bandwidth)
/// sampled at kKdePoints over [min - 3h, max + 3h].
DistributionSummary summarize(std::span<const double> values, bool with_kde = false);

/// Linear-interpolation quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace rsoinv
