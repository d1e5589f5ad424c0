#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "rsoinv/image.hpp"

namespace rsoinv {

/// Parameters of the emulated telescope degradation.
struct DegradeConfig {
  ImageGray kernel;  // detector-resolution PSF, odd sides, sums to 1
  double bloom_threshold = 0.8;
  double bloom_sigma = 2.0;
  double bloom_strength = 0.0;
  double noise_sigma = 0.01;
  double background_level = 0.0;
  std::uint64_t seed = 0;

  /// Throws InputError when a field is out of range.
  void validate() const;
  /// FNV-1a digest of the canonical JSON form.
  std::uint64_t hash() const;
};

void to_json(nlohmann::json& j, const DegradeConfig& cfg);
void from_json(const nlohmann::json& j, DegradeConfig& cfg);

struct DegradeRecord {
  double noise_norm = 0.0;  // ||background + noise||_2, the delta of the discrepancy principle
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const DegradeRecord& rec);

/// Circular convolution with an odd-sided kernel centred at the origin.
ImageGray convolve(const ImageGray& img, const ImageGray& kernel);

/// img + strength * G_sigma(max(img - threshold, 0)), periodic Gaussian blur. No clamping.
ImageGray bloom(const ImageGray& img, double threshold, double sigma, double strength);

/// convolve -> bloom -> + background -> + N(0, noise_sigma^2). Noise sample i
/// is drawn from a counter-based generator keyed on (cfg.seed, i).
std::pair<ImageGray, DegradeRecord> degrade(const ImageGray& img, const DegradeConfig& cfg);

/// Discrete Gaussian kernel of odd side, normalized to sum 1.
ImageGray gaussian_kernel(std::size_t side, double sigma);

}  // namespace rsoinv
