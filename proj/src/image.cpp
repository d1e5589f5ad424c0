#include "rsoinv/image.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rsoinv/error.hpp"
#include "rsoinv/hash.hpp"

namespace rsoinv {

namespace {

static_assert(std::endian::native == std::endian::little, "IMF payload I/O assumes a little-endian host");

void check_dims(std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw_input("image dimension must be positive");
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_input("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(const std::vector<char>& buf, std::size_t& pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) tok += buf[pos++];
  return tok;
}

std::size_t parse_header_number(const std::string& tok, const char* what) {
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw_input(std::string("malformed PGM header: bad ") + what);
  return std::stoul(tok);
}

ImageGray load_pgm(const std::vector<char>& buf, const std::filesystem::path& path) {
  std::size_t pos = 2;
  const std::size_t w = parse_header_number(pgm_token(buf, pos), "width");
  const std::size_t h = parse_header_number(pgm_token(buf, pos), "height");
  const std::size_t maxval = parse_header_number(pgm_token(buf, pos), "maxval");
  if (maxval == 0 || maxval > 65535) throw_input("malformed PGM header: maxval out of range");
  check_dims(w, h);
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
    throw_input("malformed PGM header in '" + path.string() + "'");
  ++pos;

  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  if (buf.size() - pos < w * h * bytes_per) throw_input("truncated PGM payload in '" + path.string() + "'");

  std::vector<float> data(w * h);
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < w * h; ++i) {
    const unsigned v = bytes_per == 1 ? p[i] : (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1];
    if (v > maxval) throw_input("PGM sample exceeds maxval in '" + path.string() + "'");
    data[i] = static_cast<float>(v * scale);
  }
  return ImageGray(w, h, std::move(data));
}

ImageGray load_imf(const std::vector<char>& buf, const std::filesystem::path& path) {
  const auto nl = std::find(buf.begin(), buf.end(), '\n');
  if (nl == buf.end()) throw_input("malformed IMF header in '" + path.string() + "'");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(buf.begin(), nl);
  } catch (const nlohmann::json::exception& e) {
    throw_input("malformed IMF header in '" + path.string() + "': " + e.what());
  }

  std::size_t w = 0, h = 0;
  std::uint64_t expected = 0;
  try {
    w = header.at("w").get<std::size_t>();
    h = header.at("h").get<std::size_t>();
    if (header.at("dtype").get<std::string>() != "f32le") throw_input("unsupported IMF dtype");
    expected = from_hex64(header.at("fnv64").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw_input("malformed IMF header in '" + path.string() + "': " + e.what());
  }
  check_dims(w, h);

  const std::size_t offset = static_cast<std::size_t>(nl - buf.begin()) + 1;
  const std::size_t payload = w * h * sizeof(float);
  if (buf.size() - offset != payload) throw_input("IMF payload size mismatch in '" + path.string() + "'");
  const auto* bytes = reinterpret_cast<const unsigned char*>(buf.data() + offset);
  if (fnv1a64(std::span(bytes, payload)) != expected) throw_input("IMF checksum mismatch in '" + path.string() + "'");

  std::vector<float> data(w * h);
  std::memcpy(data.data(), bytes, payload);
  return ImageGray(w, h, std::move(data));
}

void write_file(const std::filesystem::path& path, const std::string& header, std::span<const unsigned char> payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_input("cannot write '" + path.string() + "'");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw_input("write failed for '" + path.string() + "'");
}

}  // namespace

ImageGray::ImageGray(std::size_t width, std::size_t height, float fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill)) throw_input("image fill value must be finite");
  data_.assign(width * height, fill);
}

ImageGray::ImageGray(std::size_t width, std::size_t height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != width * height) throw_input("image data length does not match dimensions");
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); }))
    throw_input("image data contains non-finite values");
}

double ImageGray::sum() const {
  double s = 0.0;
  for (float v : data_) s += v;
  return s;
}

ImageGray load_image(const std::filesystem::path& path) {
  const auto buf = read_all(path);
  if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return load_pgm(buf, path);
  if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '6' || buf[1] == '3'))
    throw_input("colour images are not supported: '" + path.string() + "'");
  if (!buf.empty() && buf[0] == '{') return load_imf(buf, path);
  throw_input("unrecognized image format: '" + path.string() + "'");
}

void save_image(const ImageGray& img, const std::filesystem::path& path, ImageFormat format) {
  if (img.empty()) throw_input("cannot save an empty image");
  const std::size_t n = img.size();

  if (format == ImageFormat::imf) {
    std::vector<unsigned char> payload(n * sizeof(float));
    std::memcpy(payload.data(), img.pixels().data(), payload.size());
    nlohmann::ordered_json header;
    header["w"] = img.width();
    header["h"] = img.height();
    header["dtype"] = "f32le";
    header["fnv64"] = to_hex64(fnv1a64(payload));
    write_file(path, header.dump() + "\n", payload);
    return;
  }

  const unsigned maxval = format == ImageFormat::pgm8 ? 255u : 65535u;
  const std::size_t bytes_per = format == ImageFormat::pgm8 ? 1 : 2;
  std::vector<unsigned char> payload(n * bytes_per);
  const auto px = img.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::clamp(static_cast<double>(px[i]), 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::round(v * maxval));
    if (bytes_per == 1) {
      payload[i] = static_cast<unsigned char>(q);
    } else {
      payload[2 * i] = static_cast<unsigned char>(q >> 8);
      payload[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
  }
  std::ostringstream header;
  header << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  write_file(path, header.str(), payload);
}

ImageGray downsample(const ImageGray& img, std::size_t factor) {
  if (factor == 0) throw_input("downsample factor must be >= 1");
  if (factor == 1) return img;
  const std::size_t ow = (img.width() + factor - 1) / factor;
  const std::size_t oh = (img.height() + factor - 1) / factor;
  std::vector<float> out(ow * oh);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    const std::size_t y1 = std::min(img.height(), (oy + 1) * factor);
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t x1 = std::min(img.width(), (ox + 1) * factor);
      double acc = 0.0;
      for (std::size_t y = oy * factor; y < y1; ++y)
        for (std::size_t x = ox * factor; x < x1; ++x) acc += img(x, y);
      const double count = static_cast<double>((y1 - oy * factor) * (x1 - ox * factor));
      out[oy * ow + ox] = static_cast<float>(acc / count);
    }
  }
  return ImageGray(ow, oh, std::move(out));
}

ImageGray crop(const ImageGray& img, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
  if (w == 0 || h == 0) throw_input("crop window must be non-empty");
  if (x0 > img.width() || w > img.width() - x0 || y0 > img.height() || h > img.height() - y0)
    throw_input("crop window out of bounds");
  std::vector<float> out(w * h);
  for (std::size_t y = 0; y < h; ++y)
    std::copy_n(img.pixels().begin() + static_cast<std::ptrdiff_t>((y0 + y) * img.width() + x0), w,
                out.begin() + static_cast<std::ptrdiff_t>(y * w));
  return ImageGray(w, h, std::move(out));
}

}  // namespace rsoinv
