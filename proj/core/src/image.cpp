#include "ghostdet/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ghostdet/error.hpp"

namespace ghostdet {

namespace {

void require_dims(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) {
    throw ArgumentError("image dimensions must be positive");
  }
}

void require_same_dims(const GrayImage& a, const GrayImage& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a.width()) +
                         "x" + std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                         "x" + std::to_string(b.height()));
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

GrayImage::GrayImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height) {
  require_dims(width, height);
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw ArgumentError("fill intensity must lie in [0, 1]");
  }
  pixels_.assign(width * height, fill);
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  require_dims(width, height);
  if (pixels_.size() != width * height) {
    throw DimensionError("pixel count " + std::to_string(pixels_.size()) + " does not match " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError("pixel intensity outside [0, 1]: " + std::to_string(v));
    }
  }
}

double GrayImage::mean() const noexcept {
  return std::accumulate(pixels_.begin(), pixels_.end(), 0.0) / static_cast<double>(size());
}

double GrayImage::stddev() const noexcept {
  const double mu = mean();
  double acc = 0.0;
  for (double v : pixels_) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(size()));
}

GrayImage to_grayscale(const GrayImage& red, const GrayImage& green, const GrayImage& blue) {
  require_same_dims(red, green, "to_grayscale");
  require_same_dims(red, blue, "to_grayscale");
  std::vector<double> out(red.size());
  const auto r = red.pixels();
  const auto g = green.pixels();
  const auto b = blue.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp01(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  }
  return GrayImage(red.width(), red.height(), std::move(out));
}

GrayImage to_grayscale(const RgbImage& rgb) { return to_grayscale(rgb.red, rgb.green, rgb.blue); }

GrayImage translate(const GrayImage& img, int tx, int ty, TranslationMode mode) {
  const auto w = img.width();
  const auto h = img.height();
  const auto limit = static_cast<long long>(std::min(w, h));
  if (tx < 0 || ty < 0 || tx >= limit || ty >= limit) {
    throw ArgumentError("translation (" + std::to_string(tx) + ", " + std::to_string(ty) +
                        ") outside [0, " + std::to_string(limit) + ")");
  }
  const auto sx = static_cast<std::size_t>(tx);
  const auto sy = static_cast<std::size_t>(ty);
  std::vector<double> out(img.size(), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    if (mode == TranslationMode::zero_fill && y < sy) continue;
    const std::size_t src_y = (y + h - sy) % h;
    for (std::size_t x = 0; x < w; ++x) {
      if (mode == TranslationMode::zero_fill && x < sx) continue;
      out[y * w + x] = img((x + w - sx) % w, src_y);
    }
  }
  return GrayImage(w, h, std::move(out));
}

GrayImage blend(const GrayImage& original, const GrayImage& copy, double intensity) {
  require_same_dims(original, copy, "blend");
  if (!(intensity >= 0.0 && intensity <= 1.0)) {
    throw ArgumentError("blend intensity must lie in [0, 1]");
  }
  const auto a = original.pixels();
  const auto b = copy.pixels();
  std::vector<double> out(a.size());
  const double keep = 1.0 - intensity;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = clamp01(keep * a[i] + intensity * b[i]);
  }
  return GrayImage(original.width(), original.height(), std::move(out));
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("gaussian sigma must be positive and finite");
  }
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double d = static_cast<double>(i);
    const double v = std::exp(-(d * d) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto taps = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto src = img.pixels();

  std::vector<double> horizontal(img.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const auto sx = std::clamp<std::ptrdiff_t>(x + k, 0, w - 1);
        acc += taps[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(y * w + sx)];
      }
      horizontal[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }

  const auto [lo_it, hi_it] = std::minmax_element(src.begin(), src.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(img.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const auto sy = std::clamp<std::ptrdiff_t>(y + k, 0, h - 1);
        acc += taps[static_cast<std::size_t>(k + radius)] *
               horizontal[static_cast<std::size_t>(sy * w + x)];
      }
      // Rounding can push a convex combination one ulp past the input range.
      out[static_cast<std::size_t>(y * w + x)] = std::clamp(acc, lo, hi);
    }
  }
  return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage crop(const GrayImage& img, std::size_t x0, std::size_t y0, std::size_t width,
               std::size_t height) {
  if (width == 0 || height == 0 || x0 + width > img.width() || y0 + height > img.height()) {
    throw ArgumentError("crop rectangle outside image");
  }
  std::vector<double> out;
  out.reserve(width * height);
  for (std::size_t y = y0; y < y0 + height; ++y) {
    const auto r = img.row(y).subspan(x0, width);
    out.insert(out.end(), r.begin(), r.end());
  }
  return GrayImage(width, height, std::move(out));
}

PatchSet extract_patches(const GrayImage& img, std::size_t patch_size) {
  if (patch_size == 0 || patch_size > std::min(img.width(), img.height())) {
    throw ArgumentError("patch size " + std::to_string(patch_size) + " does not fit a " +
                        std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " image");
  }
  PatchSet set;
  set.grid.patch_size = patch_size;
  set.grid.rows = img.height() / patch_size;
  set.grid.cols = img.width() / patch_size;
  set.patches.reserve(set.grid.rows * set.grid.cols);
  for (std::size_t r = 0; r < set.grid.rows; ++r) {
    for (std::size_t c = 0; c < set.grid.cols; ++c) {
      const std::size_t oy = r * patch_size;
      const std::size_t ox = c * patch_size;
      set.grid.origins.emplace_back(oy, ox);
      set.patches.push_back(crop(img, ox, oy, patch_size, patch_size));
    }
  }
  return set;
}

}  // namespace ghostdet
