#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ghostdet {

/// Dense row-major grid of grayscale intensities, each in [0, 1].
///
/// Construction validates the range, so every GrayImage reachable through the
/// public API satisfies the invariant.
class GrayImage {
 public:
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  GrayImage(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double operator()(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }
  std::span<const double> pixels() const& noexcept { return pixels_; }
  // A span into a temporary would dangle.
  std::span<const double> pixels() const&& = delete;
  std::span<const double> row(std::size_t y) const noexcept {
    return std::span<const double>(pixels_).subspan(y * width_, width_);
  }

  double mean() const noexcept;
  /// Population standard deviation.
  double stddev() const noexcept;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> pixels_;
};

/// Three-plane color image; planes share dimensions.
struct RgbImage {
  GrayImage red;
  GrayImage green;
  GrayImage blue;
};

/// Real-valued grid without a range restriction (filter responses etc.).
struct RealGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double operator()(std::size_t x, std::size_t y) const noexcept { return values[y * width + x]; }
};

enum class TranslationMode { circular, zero_fill };

/// Layout of the non-overlapping patches cut from an image.
struct PatchGrid {
  std::size_t patch_size = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// (row, col) pixel origin of each patch, row-major patch order.
  std::vector<std::pair<std::size_t, std::size_t>> origins;
};

struct PatchSet {
  PatchGrid grid;
  std::vector<GrayImage> patches;
};

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
GrayImage to_grayscale(const GrayImage& red, const GrayImage& green, const GrayImage& blue);
GrayImage to_grayscale(const RgbImage& rgb);

/// out(x, y) = img(x - tx, y - ty). Circular mode wraps; zero_fill reads 0
/// outside the source. Offsets must lie in [0, min(width, height)).
GrayImage translate(const GrayImage& img, int tx, int ty,
                    TranslationMode mode = TranslationMode::circular);

/// Pointwise (1 - intensity) * original + intensity * copy.
GrayImage blend(const GrayImage& original, const GrayImage& copy, double intensity);

/// Separable Gaussian with kernel radius ceil(3 sigma) and replicated borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// Normalized 1D Gaussian taps for `sigma`, length 2 * ceil(3 sigma) + 1.
std::vector<double> gaussian_kernel(double sigma);

/// Cuts floor(h / p) x floor(w / p) square patches; leftover border pixels
/// are dropped.
PatchSet extract_patches(const GrayImage& img, std::size_t patch_size);

/// Copies the width x height block whose top-left corner is (x0, y0).
GrayImage crop(const GrayImage& img, std::size_t x0, std::size_t y0, std::size_t width,
               std::size_t height);

}  // namespace ghostdet
