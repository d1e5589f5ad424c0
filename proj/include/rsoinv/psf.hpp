#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "rsoinv/image.hpp"

namespace rsoinv {

struct PixelPos {
  std::size_t x = 0;
  std::size_t y = 0;
  friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

/// Local maxima (>= all 8 neighbours) above `threshold` that lie at least
/// `edge_margin` pixels from every border and whose nearest other maximum is
/// at least `min_sep` away. Close pairs are both rejected. Sorted by
/// descending peak value, ties by (y, x).
std::vector<PixelPos> detect_stars(const ImageGray& img, double threshold, double min_sep, std::size_t edge_margin);

/// Cutout around a star. (cx, cy) are in stamp pixel coordinates, where
/// pixel (i, j) covers [i - 0.5, i + 0.5] x [j - 0.5, j + 0.5].
struct StarStamp {
  ImageGray pixels;
  double cx = 0.0;
  double cy = 0.0;
  double flux = 0.0;
  double background = 0.0;

  std::size_t side() const { return pixels.width(); }
};

struct StampExtraction {
  std::vector<StarStamp> stamps;
  std::size_t skipped = 0;  // positions too close to a border
};

/// Square stamps of side 2*radius + 1. Background is the median of the
/// stamp's outer ring, flux the clamped background-subtracted sum, and the
/// centre the centroid of the positive background-subtracted intensity.
StampExtraction extract_stamps(const ImageGray& img, const std::vector<PixelPos>& positions, std::size_t radius);

/// Oversampled effective PSF. Grid cell (i, j) holds the pixel-integrated PSF
/// at detector offset ((i - center) / q, (j - center) / q) with
/// center = (q * kernel_side - 1) / 2.
struct EffectivePsf {
  std::vector<double> grid;  // (q * kernel_side)^2, row-major
  int oversample = 4;
  int kernel_side = 0;
  int iterations_run = 0;
  double final_shift = 0.0;
  std::vector<double> residual_history;  // mean per-star residual norm per accepted iteration

  std::size_t grid_side() const { return static_cast<std::size_t>(oversample * kernel_side); }
  double center() const { return (oversample * kernel_side - 1) / 2.0; }
  /// Bilinear value at a detector-pixel offset from the PSF centre; 0 outside the grid.
  double value_at(double dx, double dy) const;
};

struct EpsfOptions {
  int oversample = 4;
  int kernel_side = 15;
  int max_iter = 20;
  double tol = 0.01;  // pixels
};

struct StarFit {
  double cx = 0.0;
  double cy = 0.0;
  double flux = 0.0;
  double residual_norm = 0.0;
};

/// Least-squares fit of flux * PSF(. - c) + background to a stamp: flux in
/// closed form, position by quadratic refinement over 3x3 candidate shifts
/// starting at grid resolution 1/q and halving on stagnation.
StarFit fit_star(const EffectivePsf& epsf, const StarStamp& stamp);

/// Iterative ePSF construction: scatter flux-normalized samples onto the
/// oversampled grid (cell means, then a 3x3 boxcar when q > 1), refit every
/// star, repeat until the largest position change is below tol. An iteration
/// that would raise the mean residual is rejected and ends the loop.
EffectivePsf build_epsf(const std::vector<StarStamp>& stamps, const EpsfOptions& opts = {});

/// Detector-resolution kernel (kernel_side^2) for a source offset (dx, dy) in
/// [-0.5, 0.5], normalized to sum 1. A q = 1 grid carries no subpixel
/// information and is returned as is.
ImageGray sample_kernel(const EffectivePsf& epsf, double dx = 0.0, double dy = 0.0);

/// Writes the grid as IMF plus a JSON sidecar at `<path>.json`.
void save_epsf(const EffectivePsf& epsf, const std::filesystem::path& path);
EffectivePsf load_epsf(const std::filesystem::path& path);

}  // namespace rsoinv
