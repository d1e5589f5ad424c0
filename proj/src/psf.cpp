#include "rsoinv/psf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "rsoinv/error.hpp"
#include "rsoinv/parallel.hpp"

namespace rsoinv {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Sum of squared residuals and the optimal flux for a fixed centre.
struct ProfileFit {
  double flux;
  double sse;
};

ProfileFit fit_flux(const EffectivePsf& epsf, const StarStamp& stamp, double cx, double cy) {
  double dm = 0.0, mm = 0.0, dd = 0.0;
  const std::size_t side = stamp.side();
  for (std::size_t j = 0; j < side; ++j) {
    for (std::size_t i = 0; i < side; ++i) {
      const double d = stamp.pixels(i, j) - stamp.background;
      const double m = epsf.value_at(static_cast<double>(i) - cx, static_cast<double>(j) - cy);
      dm += d * m;
      mm += m * m;
      dd += d * d;
    }
  }
  if (mm <= 0.0) return {0.0, dd};
  const double flux = dm / mm;
  return {flux, std::max(dd - flux * dm, 0.0)};
}

// Offset of the minimum of the parabola through (-1, a), (0, b), (1, c).
double parabola_vertex(double a, double b, double c) {
  const double curvature = a - 2.0 * b + c;
  if (curvature > 0.0) return std::clamp(0.5 * (a - c) / curvature, -1.0, 1.0);
  if (a < c) return -1.0;
  if (c < a) return 1.0;
  return 0.0;
}

double zero_offset_sum(const EffectivePsf& epsf) {
  const double h = (epsf.kernel_side - 1) / 2.0;
  double s = 0.0;
  for (int r = 0; r < epsf.kernel_side; ++r)
    for (int p = 0; p < epsf.kernel_side; ++p) s += epsf.value_at(p - h, r - h);
  return s;
}

void normalize(EffectivePsf& epsf) {
  const double s = zero_offset_sum(epsf);
  if (!(s > 0.0) || !std::isfinite(s)) throw_numerical("ePSF has no positive mass to normalize");
  for (double& v : epsf.grid) v /= s;
}

// Scatter flux-normalized star samples onto the oversampled grid.
EffectivePsf scatter(const std::vector<StarStamp>& stamps, const std::vector<StarFit>& fits, const EpsfOptions& opts) {
  EffectivePsf epsf;
  epsf.oversample = opts.oversample;
  epsf.kernel_side = opts.kernel_side;
  const std::size_t side = epsf.grid_side();
  const double center = epsf.center();
  const double q = opts.oversample;

  std::vector<double> sum(side * side, 0.0);
  std::vector<std::size_t> count(side * side, 0);
  for (std::size_t s = 0; s < stamps.size(); ++s) {
    const StarFit& f = fits[s];
    if (!(f.flux > 0.0)) continue;
    const StarStamp& st = stamps[s];
    for (std::size_t j = 0; j < st.side(); ++j) {
      const double gy = std::round(center + q * (static_cast<double>(j) - f.cy));
      if (gy < 0.0 || gy >= static_cast<double>(side)) continue;
      for (std::size_t i = 0; i < st.side(); ++i) {
        const double gx = std::round(center + q * (static_cast<double>(i) - f.cx));
        if (gx < 0.0 || gx >= static_cast<double>(side)) continue;
        const auto cell = static_cast<std::size_t>(gy) * side + static_cast<std::size_t>(gx);
        sum[cell] += (st.pixels(i, j) - st.background) / f.flux;
        ++count[cell];
      }
    }
  }

  std::vector<double> mean(side * side, 0.0);
  for (std::size_t c = 0; c < mean.size(); ++c)
    if (count[c] > 0) mean[c] = sum[c] / static_cast<double>(count[c]);

  if (opts.oversample == 1) {
    epsf.grid = std::move(mean);
    return epsf;
  }

  // 3x3 boxcar over populated cells only.
  epsf.grid.assign(side * side, 0.0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      double acc = 0.0;
      int n = 0;
      for (std::size_t yy = (y == 0 ? 0 : y - 1); yy <= std::min(side - 1, y + 1); ++yy)
        for (std::size_t xx = (x == 0 ? 0 : x - 1); xx <= std::min(side - 1, x + 1); ++xx)
          if (count[yy * side + xx] > 0) {
            acc += mean[yy * side + xx];
            ++n;
          }
      if (n > 0) epsf.grid[y * side + x] = acc / n;
    }
  }
  return epsf;
}

// Float rounding leaves the sum a few 1e-9 off one. Push the deficit through
// the entries from largest to smallest; smaller entries absorb finer residues.
// Equal entries move together so symmetric kernels stay symmetric.
void unit_sum_float(std::vector<float>& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a] > data[b]; });
  double sum = 0.0;
  for (float x : data) sum += x;
  double deficit = 1.0 - sum;
  for (std::size_t start = 0; start < order.size() && deficit != 0.0;) {
    const float value = data[order[start]];
    std::size_t end = start;
    while (end < order.size() && data[order[end]] == value) ++end;
    if (value <= 0.0f) break;
    const double count = static_cast<double>(end - start);
    const float adjusted = static_cast<float>(value + deficit / count);
    if (adjusted >= 0.0f) {
      deficit -= count * (static_cast<double>(adjusted) - value);
      for (std::size_t i = start; i < end; ++i) data[order[i]] = adjusted;
    }
    start = end;
  }
}

}  // namespace

std::vector<PixelPos> detect_stars(const ImageGray& img, double threshold, double min_sep, std::size_t edge_margin) {
  if (!(threshold > 0.0)) throw_input("detection threshold must be positive");
  if (!(min_sep >= 1.0)) throw_input("min_sep must be >= 1");

  const std::size_t w = img.width();
  const std::size_t h = img.height();
  std::vector<PixelPos> maxima;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const float v = img(x, y);
      if (!(v > threshold)) continue;
      bool is_max = true;
      for (std::size_t yy = (y == 0 ? 0 : y - 1); is_max && yy <= std::min(h - 1, y + 1); ++yy)
        for (std::size_t xx = (x == 0 ? 0 : x - 1); xx <= std::min(w - 1, x + 1); ++xx)
          if ((xx != x || yy != y) && img(xx, yy) > v) {
            is_max = false;
            break;
          }
      if (is_max) maxima.push_back({x, y});
    }
  }

  const double sep2 = min_sep * min_sep;
  std::vector<PixelPos> kept;
  for (std::size_t a = 0; a < maxima.size(); ++a) {
    const PixelPos& p = maxima[a];
    if (std::min({p.x, p.y, w - 1 - p.x, h - 1 - p.y}) < edge_margin) continue;
    bool isolated = true;
    for (std::size_t b = 0; b < maxima.size() && isolated; ++b) {
      if (a == b) continue;
      const double dx = static_cast<double>(p.x) - static_cast<double>(maxima[b].x);
      const double dy = static_cast<double>(p.y) - static_cast<double>(maxima[b].y);
      isolated = dx * dx + dy * dy >= sep2;
    }
    if (isolated) kept.push_back(p);
  }

  std::sort(kept.begin(), kept.end(), [&](const PixelPos& a, const PixelPos& b) {
    const float va = img(a.x, a.y), vb = img(b.x, b.y);
    if (va != vb) return va > vb;
    return std::tie(a.y, a.x) < std::tie(b.y, b.x);
  });
  return kept;
}

StampExtraction extract_stamps(const ImageGray& img, const std::vector<PixelPos>& positions, std::size_t radius) {
  if (radius < 2) throw_input("stamp radius must be >= 2");
  StampExtraction out;
  const std::size_t side = 2 * radius + 1;
  for (const PixelPos& p : positions) {
    if (p.x < radius || p.y < radius || p.x + radius >= img.width() || p.y + radius >= img.height()) {
      ++out.skipped;
      continue;
    }
    StarStamp st;
    st.pixels = crop(img, p.x - radius, p.y - radius, side, side);

    std::vector<double> ring;
    ring.reserve(4 * side);
    for (std::size_t j = 0; j < side; ++j)
      for (std::size_t i = 0; i < side; ++i)
        if (i == 0 || j == 0 || i == side - 1 || j == side - 1) ring.push_back(st.pixels(i, j));
    st.background = median_of(std::move(ring));

    double flux = 0.0, wsum = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < side; ++j)
      for (std::size_t i = 0; i < side; ++i) {
        const double d = st.pixels(i, j) - st.background;
        flux += d;
        if (d > 0.0) {
          wsum += d;
          mx += d * static_cast<double>(i);
          my += d * static_cast<double>(j);
        }
      }
    st.flux = std::max(flux, 0.0);
    st.cx = wsum > 0.0 ? mx / wsum : static_cast<double>(radius);
    st.cy = wsum > 0.0 ? my / wsum : static_cast<double>(radius);
    out.stamps.push_back(std::move(st));
  }
  return out;
}

double EffectivePsf::value_at(double dx, double dy) const {
  const double gx = center() + oversample * dx;
  const double gy = center() + oversample * dy;
  const auto side = static_cast<double>(grid_side());
  if (gx <= -1.0 || gy <= -1.0 || gx >= side || gy >= side) return 0.0;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const double tx = gx - fx, ty = gy - fy;
  const auto n = static_cast<long>(grid_side());
  auto at = [&](long x, long y) -> double {
    if (x < 0 || y < 0 || x >= n || y >= n) return 0.0;
    return grid[static_cast<std::size_t>(y * n + x)];
  };
  const auto x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
  return (1 - tx) * (1 - ty) * at(x0, y0) + tx * (1 - ty) * at(x0 + 1, y0) + (1 - tx) * ty * at(x0, y0 + 1) +
         tx * ty * at(x0 + 1, y0 + 1);
}

StarFit fit_star(const EffectivePsf& epsf, const StarStamp& stamp) {
  if (epsf.grid.size() != epsf.grid_side() * epsf.grid_side() || epsf.grid.empty())
    throw_input("ePSF grid has the wrong size");
  const double lo = 0.0;
  const double hi = static_cast<double>(stamp.side() - 1);

  double cx = std::clamp(stamp.cx, lo, hi);
  double cy = std::clamp(stamp.cy, lo, hi);
  ProfileFit best = fit_flux(epsf, stamp, cx, cy);
  double step = 1.0 / epsf.oversample;
  const double min_step = 1e-4 / epsf.oversample;

  for (int it = 0; it < 400 && step >= min_step && best.sse > 0.0; ++it) {
    std::array<double, 9> sse{};
    double cand_x = cx, cand_y = cy;
    ProfileFit cand = best;
    for (int j = -1; j <= 1; ++j)
      for (int i = -1; i <= 1; ++i) {
        const double px = std::clamp(cx + i * step, lo, hi);
        const double py = std::clamp(cy + j * step, lo, hi);
        const ProfileFit f = (i == 0 && j == 0) ? best : fit_flux(epsf, stamp, px, py);
        sse[static_cast<std::size_t>((j + 1) * 3 + (i + 1))] = f.sse;
        if (f.sse < cand.sse) {
          cand = f;
          cand_x = px;
          cand_y = py;
        }
      }
    const double vx = parabola_vertex(sse[3], sse[4], sse[5]);
    const double vy = parabola_vertex(sse[1], sse[4], sse[7]);
    const double qx = std::clamp(cx + vx * step, lo, hi);
    const double qy = std::clamp(cy + vy * step, lo, hi);
    const ProfileFit fq = fit_flux(epsf, stamp, qx, qy);
    if (fq.sse < cand.sse) {
      cand = fq;
      cand_x = qx;
      cand_y = qy;
    }

    if (cand.sse < best.sse) {
      best = cand;
      cx = cand_x;
      cy = cand_y;
    } else {
      step *= 0.5;
    }
  }

  if (!std::isfinite(best.sse) || !std::isfinite(best.flux)) throw_numerical("star fit produced a non-finite residual");
  return StarFit{cx, cy, best.flux, std::sqrt(best.sse)};
}

EffectivePsf build_epsf(const std::vector<StarStamp>& stamps, const EpsfOptions& opts) {
  if (stamps.empty()) throw_input("build_epsf needs at least one stamp");
  if (opts.oversample < 1) throw_input("oversampling factor must be >= 1");
  if (opts.kernel_side < 1 || opts.kernel_side % 2 == 0) throw_input("kernel side must be odd and positive");
  if (opts.max_iter < 1) throw_input("max_iter must be >= 1");
  if (!(opts.tol > 0.0)) throw_input("tolerance must be positive");
  if (std::none_of(stamps.begin(), stamps.end(), [](const StarStamp& s) { return s.flux > 0.0; }))
    throw_input("all stamps have zero flux");

  std::vector<StarFit> fits(stamps.size());
  for (std::size_t s = 0; s < stamps.size(); ++s) fits[s] = {stamps[s].cx, stamps[s].cy, stamps[s].flux, 0.0};

  EffectivePsf current;
  double prev_mean = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iter; ++it) {
    EffectivePsf trial = scatter(stamps, fits, opts);
    normalize(trial);

    std::vector<StarFit> refit(stamps.size());
    parallel_for(stamps.size(), [&](std::size_t s) {
      StarStamp st = stamps[s];
      st.cx = fits[s].cx;
      st.cy = fits[s].cy;
      refit[s] = fit_star(trial, st);
    });

    double mean = 0.0;
    for (const StarFit& f : refit) mean += f.residual_norm;
    mean /= static_cast<double>(refit.size());
    if (it > 1 && mean > prev_mean) break;

    double shift = 0.0;
    for (std::size_t s = 0; s < refit.size(); ++s)
      shift = std::max(shift, std::hypot(refit[s].cx - fits[s].cx, refit[s].cy - fits[s].cy));

    trial.residual_history = current.residual_history;
    trial.residual_history.push_back(mean);
    trial.iterations_run = it;
    trial.final_shift = shift;
    current = std::move(trial);
    fits = std::move(refit);
    prev_mean = mean;
    if (shift < opts.tol) break;
  }

  for (double& v : current.grid) v = std::max(v, 0.0);
  normalize(current);
  return current;
}

ImageGray sample_kernel(const EffectivePsf& epsf, double dx, double dy) {
  if (!(std::abs(dx) <= 0.5) || !(std::abs(dy) <= 0.5)) throw_input("kernel offsets must lie in [-0.5, 0.5]");
  if (epsf.kernel_side < 1 || epsf.grid.size() != epsf.grid_side() * epsf.grid_side())
    throw_input("ePSF is not finalized");
  const auto k = static_cast<std::size_t>(epsf.kernel_side);
  std::vector<double> v(k * k);
  if (epsf.oversample == 1) {
    v = epsf.grid;
  } else {
    const double h = (epsf.kernel_side - 1) / 2.0;
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t p = 0; p < k; ++p)
        v[r * k + p] = epsf.value_at(static_cast<double>(p) - h - dx, static_cast<double>(r) - h - dy);
  }
  double total = 0.0;
  for (double x : v) total += x;
  if (!(total > 0.0)) throw_numerical("sampled kernel has no positive mass");
  std::vector<float> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) data[i] = static_cast<float>(v[i] / total);
  unit_sum_float(data);
  return ImageGray(k, k, std::move(data));
}

void save_epsf(const EffectivePsf& epsf, const std::filesystem::path& path) {
  const std::size_t side = epsf.grid_side();
  std::vector<float> data(epsf.grid.begin(), epsf.grid.end());
  save_image(ImageGray(side, side, std::move(data)), path, ImageFormat::imf);
  nlohmann::ordered_json meta;
  meta["q"] = epsf.oversample;
  meta["kernel_side"] = epsf.kernel_side;
  meta["iterations"] = epsf.iterations_run;
  meta["final_shift"] = epsf.final_shift;
  std::ofstream out(path.string() + ".json");
  if (!out) throw_input("cannot write ePSF sidecar for '" + path.string() + "'");
  out << meta.dump() << '\n';
}

EffectivePsf load_epsf(const std::filesystem::path& path) {
  const ImageGray grid = load_image(path);
  std::ifstream in(path.string() + ".json");
  if (!in) throw_input("missing ePSF sidecar '" + path.string() + ".json'");
  EffectivePsf epsf;
  try {
    const auto meta = nlohmann::json::parse(in);
    epsf.oversample = meta.at("q").get<int>();
    epsf.kernel_side = meta.at("kernel_side").get<int>();
    epsf.iterations_run = meta.at("iterations").get<int>();
    epsf.final_shift = meta.at("final_shift").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("malformed ePSF sidecar: ") + e.what());
  }
  if (epsf.oversample < 1 || epsf.kernel_side < 1 || epsf.kernel_side % 2 == 0 || grid.width() != grid.height() ||
      grid.width() != epsf.grid_side())
    throw_input("ePSF sidecar does not match grid");
  epsf.grid.assign(grid.pixels().begin(), grid.pixels().end());
  return epsf;
}

}  // namespace rsoinv
