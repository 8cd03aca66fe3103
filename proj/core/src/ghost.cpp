#include "ghostdet/ghost.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ghostdet/error.hpp"
#include "ghostdet/fft.hpp"

namespace ghostdet {

std::string_view to_string(OffsetMode mode) {
  return mode == OffsetMode::random ? "random" : "proportional";
}

OffsetMode parse_offset_mode(std::string_view text) {
  if (text == "random") return OffsetMode::random;
  if (text == "proportional") return OffsetMode::proportional;
  throw ArgumentError("unknown offset mode '" + std::string(text) + "'");
}

namespace {

void check_counts(int k, int n) {
  if (n < 2) throw ArgumentError("mirror needs at least 2 segments, got " + std::to_string(n));
  if (k < 0 || k >= n) {
    throw ArgumentError("misaligned count " + std::to_string(k) + " outside [0, " +
                        std::to_string(n - 1) + "]");
  }
}

}  // namespace

double intensity_for(int k, int n) {
  check_counts(k, n);
  return static_cast<double>(k) / static_cast<double>(n);
}

std::pair<int, int> offset_for(int k, int n, OffsetMode mode, Rng& rng) {
  check_counts(k, n);
  if (k == 0) return {0, 0};
  if (mode == OffsetMode::random) {
    const auto tx = static_cast<int>(rng.uniform_int(0, kMaxOffset));
    const auto ty = static_cast<int>(rng.uniform_int(0, kMaxOffset));
    return {tx, ty};
  }
  const auto t = static_cast<int>(std::lround(kMaxOffset * static_cast<double>(k) / (n - 1)));
  return {t, t};
}

GhostParams make_ghost_params(int k, int n, OffsetMode mode, Rng& rng) {
  const auto [tx, ty] = offset_for(k, n, mode, rng);
  return GhostParams{n, k, intensity_for(k, n), tx, ty, mode};
}

GrayImage inject_ghost(const GrayImage& img, const GhostParams& params, TranslationMode mode) {
  check_counts(params.k_misaligned, params.n_segments);
  if (params.k_misaligned == 0) return img;
  if (params.tx < 0 || params.ty < 0 || params.tx > kMaxOffset || params.ty > kMaxOffset) {
    throw ArgumentError("ghost offset outside [0, 15]");
  }
  if (img.width() <= static_cast<std::size_t>(kMaxOffset) ||
      img.height() <= static_cast<std::size_t>(kMaxOffset)) {
    throw ArgumentError("ghost injection needs images larger than 15 pixels per axis");
  }
  return blend(img, translate(img, params.tx, params.ty, mode), params.intensity);
}

GrayImage synth_ground_image(std::size_t size, double alpha, std::uint64_t seed) {
  if (size < 16) throw ArgumentError("ground image size must be at least 16");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ArgumentError("spectral exponent must be finite and non-negative");
  }
  Rng rng(seed);
  const auto signed_freq = [size](std::size_t i) {
    return i <= size / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(size);
  };

  ComplexSpectrum spectrum{size, size, std::vector<Complex>(size * size)};
  for (std::size_t n = 0; n < size; ++n) {
    for (std::size_t m = 0; m < size; ++m) {
      const std::size_t pm = (size - m) % size;
      const std::size_t pn = (size - n) % size;
      const std::size_t self = n * size + m;
      const std::size_t partner = pn * size + pm;
      if (partner < self) continue;  // filled as the conjugate of an earlier bin
      if (m == 0 && n == 0) continue;  // no DC: the rescale sets the mean
      const double radius = std::hypot(signed_freq(m), signed_freq(n)) / static_cast<double>(size);
      const double amplitude = std::pow(radius, -alpha);
      if (partner == self) {
        // Self-conjugate bins must be real; the phase reduces to a sign.
        spectrum.values[self] = rng.uniform() < 0.5 ? amplitude : -amplitude;
      } else {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        spectrum.values[self] = std::polar(amplitude, phase);
        spectrum.values[partner] = std::conj(spectrum.values[self]);
      }
    }
  }

  const auto field = idft2(spectrum);
  double lo = field[0].real();
  double hi = lo;
  for (const auto& v : field) {
    lo = std::min(lo, v.real());
    hi = std::max(hi, v.real());
  }
  std::vector<double> px(field.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < px.size(); ++i) {
      px[i] = std::clamp((field[i].real() - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  return GrayImage(size, size, std::move(px));
}

}  // namespace ghostdet
