#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include <fftw3.h>

#include "rsoinv/error.hpp"

namespace rsoinv::detail {

namespace {

struct PlanPair {
  fftw_plan r2c;
  fftw_plan c2r;
};

// FFTW's planner is not thread-safe; every plan is created under this lock and
// kept for the process lifetime.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t width, std::size_t height) {
  static std::map<std::pair<std::size_t, std::size_t>, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  const auto key = std::make_pair(width, height);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const std::size_t n = width * height;
  const std::size_t nc = height * (width / 2 + 1);
  double* re = fftw_alloc_real(n);
  fftw_complex* co = fftw_alloc_complex(nc);
  const int h = static_cast<int>(height);
  const int w = static_cast<int>(width);
  PlanPair p{fftw_plan_dft_r2c_2d(h, w, re, co, FFTW_ESTIMATE),
             fftw_plan_dft_c2r_2d(h, w, co, re, FFTW_ESTIMATE)};
  fftw_free(re);
  fftw_free(co);
  if (!p.r2c || !p.c2r) throw_numerical("FFTW plan creation failed");
  cache.emplace(key, p);
  return p;
}

struct RealBuf {
  explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~RealBuf() { fftw_free(p); }
  RealBuf(const RealBuf&) = delete;
  RealBuf& operator=(const RealBuf&) = delete;
  double* p;
};

struct ComplexBuf {
  explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~ComplexBuf() { fftw_free(p); }
  ComplexBuf(const ComplexBuf&) = delete;
  ComplexBuf& operator=(const ComplexBuf&) = delete;
  fftw_complex* p;
};

}  // namespace

Fft2d::Fft2d(std::size_t width, std::size_t height) : width_(width), height_(height) {
  if (width == 0 || height == 0) throw_input("FFT grid must be non-empty");
  const PlanPair p = plans_for(width, height);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

Spectrum Fft2d::forward(std::span<const double> real) const {
  const std::size_t n = width_ * height_;
  if (real.size() != n) throw_input("FFT input length mismatch");
  RealBuf in(n);
  ComplexBuf out(spectrum_size());
  std::copy(real.begin(), real.end(), in.p);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), in.p, out.p);
  Spectrum spec(spectrum_size());
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = {out.p[i][0], out.p[i][1]};
  return spec;
}

std::vector<double> Fft2d::inverse(const Spectrum& spec) const {
  if (spec.size() != spectrum_size()) throw_input("FFT spectrum length mismatch");
  const std::size_t n = width_ * height_;
  ComplexBuf in(spectrum_size());
  RealBuf out(n);
  std::memcpy(in.p, spec.data(), spectrum_size() * sizeof(fftw_complex));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), in.p, out.p);
  std::vector<double> result(out.p, out.p + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : result) v *= scale;
  return result;
}

std::vector<double> embed_centered(std::span<const float> kernel, std::size_t kw, std::size_t kh,
                                   std::size_t width, std::size_t height) {
  if (kw % 2 == 0 || kh % 2 == 0) throw_input("kernel sides must be odd");
  if (kw > width || kh > height) throw_input("kernel larger than image");
  if (kernel.size() != kw * kh) throw_input("kernel length mismatch");
  std::vector<double> grid(width * height, 0.0);
  const std::size_t cx = kw / 2;
  const std::size_t cy = kh / 2;
  for (std::size_t j = 0; j < kh; ++j) {
    const std::size_t y = (j + height - cy) % height;
    for (std::size_t i = 0; i < kw; ++i) {
      const std::size_t x = (i + width - cx) % width;
      grid[y * width + x] += kernel[j * kw + i];
    }
  }
  return grid;
}

Spectrum multiply(const Spectrum& signal, const Spectrum& kernel_hat, bool conjugate) {
  Spectrum out(signal.size());
  if (conjugate) {
    for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] * std::conj(kernel_hat[i]);
  } else {
    for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] * kernel_hat[i];
  }
  return out;
}

}  // namespace rsoinv::detail
