#pragma once

// Test-only reference implementations. Nothing here may call into the
// library's FFT code.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "ghostdet/image.hpp"
#include "ghostdet/random.hpp"

namespace oracle {

using Complex = std::complex<double>;

/// Direct O((MN)^2) double sum of the 2D DFT definition.
inline std::vector<Complex> naive_dft2(const ghostdet::GrayImage& img) {
  const std::size_t M = img.width();
  const std::size_t N = img.height();
  std::vector<Complex> out(M * N);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      Complex acc{};
      for (std::size_t y = 0; y < N; ++y) {
        for (std::size_t x = 0; x < M; ++x) {
          const double angle = -2.0 * std::numbers::pi *
                               (static_cast<double>(m * x % M) / static_cast<double>(M) +
                                static_cast<double>(n * y % N) / static_cast<double>(N));
          acc += img(x, y) * Complex(std::cos(angle), std::sin(angle));
        }
      }
      out[n * M + m] = acc;
    }
  }
  return out;
}

/// Direct O(n^2) 1D DFT.
inline std::vector<Complex> naive_dft(const std::vector<Complex>& in) {
  const std::size_t n = in.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += in[t] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

inline double relative_frobenius(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::norm(a[i] - b[i]);
    ref += std::norm(b[i]);
  }
  return std::sqrt(diff) / std::sqrt(ref);
}

inline ghostdet::GrayImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  ghostdet::Rng rng(seed);
  std::vector<double> px(w * h);
  for (double& v : px) v = rng.uniform();
  return ghostdet::GrayImage(w, h, std::move(px));
}

inline ghostdet::GrayImage checkerboard(std::size_t w, std::size_t h) {
  std::vector<double> px(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) px[y * w + x] = (x + y) % 2 == 0 ? 0.0 : 1.0;
  }
  return ghostdet::GrayImage(w, h, std::move(px));
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// |(1 - I) + I exp(-j 2 pi (m tx / M + n ty / N))|, evaluated from the
/// closed form sqrt((1-I)^2 + I^2 + 2 I (1-I) cos theta).
inline double ghost_transfer_gain(double intensity, int tx, int ty, std::size_t m, std::size_t n,
                                  std::size_t M, std::size_t N) {
  const double theta = 2.0 * std::numbers::pi *
                       (static_cast<double>(m) * tx / static_cast<double>(M) +
                        static_cast<double>(n) * ty / static_cast<double>(N));
  const double a = 1.0 - intensity;
  return std::sqrt(std::max(0.0, a * a + intensity * intensity + 2.0 * a * intensity * std::cos(theta)));
}

}  // namespace oracle
