#include "ghostdet/pnm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "ghostdet/error.hpp"

namespace ghostdet::pnm {

namespace {

struct Header {
  char kind = 0;  // '5' or '6'
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  Header read() {
    Header h;
    if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '5' && bytes_[1] != '6')) {
      throw ParseError("not a binary PGM/PPM file (expected P5 or P6 magic)", 0);
    }
    h.kind = static_cast<char>(bytes_[1]);
    pos_ = 2;
    h.width = number("width");
    h.height = number("height");
    const auto maxval = number("maxval");
    if (maxval == 0 || maxval > 255) {
      throw ParseError("unsupported maxval " + std::to_string(maxval) + " (8-bit only)", pos_);
    }
    h.maxval = static_cast<unsigned>(maxval);
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError("missing whitespace after header", pos_);
    }
    h.data_offset = pos_ + 1;
    if (h.width == 0 || h.height == 0) {
      throw ParseError("zero image dimension", pos_);
    }
    return h;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 20)) throw ParseError(std::string(what) + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("expected ") + what, start);
    return value;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); }

std::vector<std::uint8_t> header_bytes(char kind, std::size_t w, std::size_t h) {
  const std::string s = std::string("P") + kind + "\n" + std::to_string(w) + " " +
                        std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

std::span<const std::uint8_t> payload(std::span<const std::uint8_t> bytes, const Header& h,
                                      std::size_t channels) {
  const std::size_t need = h.width * h.height * channels;
  if (bytes.size() - h.data_offset < need) {
    throw ParseError("truncated pixel data: need " + std::to_string(need) + " bytes",
                     bytes.size());
  }
  return bytes.subspan(h.data_offset, need);
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  auto out = header_bytes('5', img.width(), img.height());
  out.reserve(out.size() + img.size());
  for (double v : img.pixels()) out.push_back(to_byte(v));
  return out;
}

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  const Header h = HeaderReader(bytes).read();
  if (h.kind != '5') throw ParseError("expected P5 (grayscale) data", 1);
  const auto data = payload(bytes, h, 1);
  std::vector<double> px(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) px[i] = std::min(1.0, data[i] / double(h.maxval));
  return GrayImage(h.width, h.height, std::move(px));
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const auto& r = img.red;
  if (img.green.width() != r.width() || img.green.height() != r.height() ||
      img.blue.width() != r.width() || img.blue.height() != r.height()) {
    throw DimensionError("color planes differ in size");
  }
  auto out = header_bytes('6', r.width(), r.height());
  out.reserve(out.size() + 3 * r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.push_back(to_byte(r.pixels()[i]));
    out.push_back(to_byte(img.green.pixels()[i]));
    out.push_back(to_byte(img.blue.pixels()[i]));
  }
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  const Header h = HeaderReader(bytes).read();
  if (h.kind != '6') throw ParseError("expected P6 (color) data", 1);
  const auto data = payload(bytes, h, 3);
  const std::size_t n = h.width * h.height;
  std::vector<double> r(n), g(n), b(n);
  const double scale = 1.0 / h.maxval;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = std::min(1.0, data[3 * i] * scale);
    g[i] = std::min(1.0, data[3 * i + 1] * scale);
    b[i] = std::min(1.0, data[3 * i + 2] * scale);
  }
  return RgbImage{GrayImage(h.width, h.height, std::move(r)),
                  GrayImage(h.width, h.height, std::move(g)),
                  GrayImage(h.width, h.height, std::move(b))};
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  spill(path, encode_pgm(img));
}

GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(slurp(path)); }

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  spill(path, encode_ppm(img));
}

RgbImage read_ppm(const std::filesystem::path& path) { return decode_ppm(slurp(path)); }

GrayImage read_gray(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return to_grayscale(decode_ppm(bytes));
  }
  return decode_pgm(bytes);
}

GrayImage quantize8(const GrayImage& img) { return decode_pgm(encode_pgm(img)); }

}  // namespace ghostdet::pnm
