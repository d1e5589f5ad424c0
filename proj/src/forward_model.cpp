#include "rsoinv/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fft.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/hash.hpp"

namespace rsoinv {

namespace {

std::vector<double> to_double(const ImageGray& img) { return {img.pixels().begin(), img.pixels().end()}; }

ImageGray from_double(const std::vector<double>& v, std::size_t w, std::size_t h) {
  std::vector<float> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    data[i] = static_cast<float>(v[i]);
    if (!std::isfinite(data[i])) throw_numerical("non-finite pixel produced by forward model");
  }
  return ImageGray(w, h, std::move(data));
}

// Gaussian on the torus (wrapped distances), normalized over the full grid.
std::vector<double> periodic_gaussian(std::size_t w, std::size_t h, double sigma) {
  std::vector<double> g(w * h);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (std::size_t y = 0; y < h; ++y) {
    const double dy = static_cast<double>(std::min(y, h - y));
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(std::min(x, w - x));
      g[y * w + x] = std::exp(-(dx * dx + dy * dy) * inv);
      total += g[y * w + x];
    }
  }
  for (double& v : g) v /= total;
  return g;
}

}  // namespace

void DegradeConfig::validate() const {
  if (kernel.empty()) throw_input("degrade kernel is empty");
  if (kernel.width() % 2 == 0 || kernel.height() % 2 == 0) throw_input("degrade kernel sides must be odd");
  if (std::any_of(kernel.pixels().begin(), kernel.pixels().end(), [](float v) { return v < 0.0f; }))
    throw_input("degrade kernel has negative entries");
  if (std::abs(kernel.sum() - 1.0) > 1e-6) throw_input("degrade kernel must sum to 1");
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::isfinite(bloom_threshold) || bloom_threshold < 0.0 || bloom_threshold > 1.0)
    throw_input("bloom_threshold must lie in [0, 1]");
  if (!finite_nonneg(bloom_strength)) throw_input("bloom_strength must be finite and >= 0");
  if (!std::isfinite(bloom_sigma) || (bloom_strength > 0.0 && bloom_sigma <= 0.0))
    throw_input("bloom_sigma must be positive when bloom is enabled");
  if (!finite_nonneg(noise_sigma)) throw_input("noise_sigma must be finite and >= 0");
  if (!finite_nonneg(background_level)) throw_input("background_level must be finite and >= 0");
}

std::uint64_t DegradeConfig::hash() const {
  nlohmann::json j = *this;
  return fnv1a64(j.dump());
}

void to_json(nlohmann::json& j, const DegradeConfig& cfg) {
  j = nlohmann::json{{"kernel", {{"w", cfg.kernel.width()}, {"h", cfg.kernel.height()}, {"data", cfg.kernel.data()}}},
                     {"bloom_threshold", cfg.bloom_threshold},
                     {"bloom_sigma", cfg.bloom_sigma},
                     {"bloom_strength", cfg.bloom_strength},
                     {"noise_sigma", cfg.noise_sigma},
                     {"background_level", cfg.background_level},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, DegradeConfig& cfg) {
  try {
    const auto& k = j.at("kernel");
    cfg.kernel = ImageGray(k.at("w").get<std::size_t>(), k.at("h").get<std::size_t>(),
                           k.at("data").get<std::vector<float>>());
    cfg.bloom_threshold = j.at("bloom_threshold").get<double>();
    cfg.bloom_sigma = j.at("bloom_sigma").get<double>();
    cfg.bloom_strength = j.at("bloom_strength").get<double>();
    cfg.noise_sigma = j.at("noise_sigma").get<double>();
    cfg.background_level = j.at("background_level").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw_input(std::string("malformed degrade config: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const DegradeRecord& rec) {
  j = nlohmann::json{{"noise_norm", rec.noise_norm}, {"config_hash", to_hex64(rec.config_hash)}, {"seed", rec.seed}};
}

ImageGray convolve(const ImageGray& img, const ImageGray& kernel) {
  const detail::Fft2d fft(img.width(), img.height());
  const auto grid = detail::embed_centered(kernel.pixels(), kernel.width(), kernel.height(), img.width(), img.height());
  const auto out = fft.inverse(detail::multiply(fft.forward(to_double(img)), fft.forward(grid), false));
  return from_double(out, img.width(), img.height());
}

ImageGray bloom(const ImageGray& img, double threshold, double sigma, double strength) {
  if (!(strength >= 0.0) || !std::isfinite(strength)) throw_input("bloom strength must be finite and >= 0");
  if (strength == 0.0) return img;
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw_input("bloom sigma must be positive");

  std::vector<double> highlight(img.size());
  bool any = false;
  for (std::size_t i = 0; i < img.size(); ++i) {
    highlight[i] = std::max(static_cast<double>(img.pixels()[i]) - threshold, 0.0);
    any = any || highlight[i] > 0.0;
  }
  if (!any) return img;

  const detail::Fft2d fft(img.width(), img.height());
  const auto g = periodic_gaussian(img.width(), img.height(), sigma);
  const auto glow = fft.inverse(detail::multiply(fft.forward(highlight), fft.forward(g), false));
  std::vector<double> out = to_double(img);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += strength * glow[i];
  return from_double(out, img.width(), img.height());
}

std::pair<ImageGray, DegradeRecord> degrade(const ImageGray& img, const DegradeConfig& cfg) {
  cfg.validate();
  ImageGray blurred = convolve(img, cfg.kernel);
  blurred = bloom(blurred, cfg.bloom_threshold, cfg.bloom_sigma, cfg.bloom_strength);

  const CounterRng rng(cfg.seed);
  std::vector<double> out = to_double(blurred);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = cfg.background_level + (cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal(i) : 0.0);
    out[i] += e;
    norm2 += e * e;
  }

  DegradeRecord rec;
  rec.noise_norm = std::sqrt(norm2);
  rec.config_hash = cfg.hash();
  rec.seed = cfg.seed;
  return {from_double(out, img.width(), img.height()), rec};
}

ImageGray gaussian_kernel(std::size_t side, double sigma) {
  if (side % 2 == 0) throw_input("gaussian kernel side must be odd");
  if (!(sigma > 0.0)) throw_input("gaussian sigma must be positive");
  const double c = static_cast<double>(side / 2);
  std::vector<double> v(side * side);
  double total = 0.0;
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) {
      const double dx = static_cast<double>(x) - c;
      const double dy = static_cast<double>(y) - c;
      v[y * side + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      total += v[y * side + x];
    }
  std::vector<float> data(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) data[i] = static_cast<float>(v[i] / total);
  return ImageGray(side, side, std::move(data));
}

}  // namespace rsoinv
