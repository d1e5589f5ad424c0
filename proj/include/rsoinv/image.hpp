#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace rsoinv {

/// Row-major single-channel float image. Values are nominally in [0, 1] but
/// intermediate results (e.g. deconvolution output) may leave that range.
/// Construction validates dimensions and finiteness.
class ImageGray {
 public:
  ImageGray() = default;
  /// Zero-filled image; throws InputError on a zero dimension.
  ImageGray(std::size_t width, std::size_t height, float fill = 0.0f);
  /// Throws InputError on a zero dimension, a size mismatch or non-finite data.
  ImageGray(std::size_t width, std::size_t height, std::vector<float> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float operator()(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }
  float& operator()(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }

  std::span<const float> pixels() const { return data_; }
  std::span<float> pixels() { return data_; }
  const std::vector<float>& data() const { return data_; }

  double sum() const;

  friend bool operator==(const ImageGray&, const ImageGray&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> data_;
};

enum class ImageFormat { pgm8, pgm16, imf };

/// Loads 8/16-bit binary PGM (scaled to [0,1] by maxval) or IMF (verbatim).
/// Throws InputError for unreadable files, malformed headers, checksum
/// mismatches, zero dimensions and colour (P6) input.
ImageGray load_image(const std::filesystem::path& path);

/// PGM output clamps to [0,1] and rounds value*maxval half away from zero.
void save_image(const ImageGray& img, const std::filesystem::path& path, ImageFormat format);

/// Block-mean downsample; edge blocks are clipped and averaged over the
/// pixels they actually contain. Output is ceil(w/f) x ceil(h/f).
ImageGray downsample(const ImageGray& img, std::size_t factor);

/// Exact copy of the w x h window at (x0, y0). Out-of-bounds is an error.
ImageGray crop(const ImageGray& img, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h);

}  // namespace rsoinv
