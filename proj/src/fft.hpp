#pragma once

// Internal FFTW wrapper shared by the forward model and the convolution operator.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace rsoinv::detail {

using Spectrum = std::vector<std::complex<double>>;

/// Real 2D transforms of a row-major height x width grid. Plans are built once
/// per shape with FFTW_ESTIMATE (deterministic, no timing-based planning) and
/// shared process-wide; execution is reentrant.
class Fft2d {
 public:
  Fft2d(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t spectrum_size() const { return height_ * (width_ / 2 + 1); }

  Spectrum forward(std::span<const double> real) const;
  /// Unnormalized inverse scaled by 1/(width*height), so inverse(forward(x)) == x.
  std::vector<double> inverse(const Spectrum& spec) const;

 private:
  std::size_t width_;
  std::size_t height_;
  void* r2c_;
  void* c2r_;
};

/// Places an odd-sided kernel (kw x kh, centre at its middle pixel) on a
/// width x height periodic grid with the centre at the origin.
std::vector<double> embed_centered(std::span<const float> kernel, std::size_t kw, std::size_t kh,
                                   std::size_t width, std::size_t height);

/// Pointwise product (or product with the conjugate of `kernel_hat`).
Spectrum multiply(const Spectrum& signal, const Spectrum& kernel_hat, bool conjugate);

}  // namespace rsoinv::detail
