#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "ghostdet/image.hpp"

namespace ghostdet {

using Complex = std::complex<double>;

/// Exact discrete Fourier transform of one fixed length.
///
/// Lengths whose prime factors are all <= kMaxDirectRadix use a recursive
/// mixed-radix Cooley-Tukey decomposition; anything else goes through
/// Bluestein's chirp-z convolution on a power-of-two plan. A plan is immutable
/// after construction and may be shared between threads.
class FftPlan {
 public:
  static constexpr std::size_t kMaxDirectRadix = 61;

  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  bool uses_bluestein() const noexcept { return inner_ != nullptr; }
  const std::vector<std::size_t>& factors() const noexcept { return factors_; }

  /// X[k] = sum_t x[t] exp(-2 pi i k t / n), in place.
  void forward(std::span<Complex> data) const;
  /// x[t] = (1/n) sum_k X[k] exp(+2 pi i k t / n), in place.
  void inverse(std::span<Complex> data) const;

 private:
  void mixed_radix(const Complex* in, Complex* out, std::size_t n, std::size_t stride,
                   std::size_t level, Complex* scratch) const;
  void butterfly(Complex* out, std::size_t p, std::size_t m, std::size_t n,
                 Complex* scratch) const;
  void bluestein(std::span<Complex> data) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<Complex> twiddles_;  // exp(-2 pi i t / n), t in [0, n)
  std::size_t max_radix_ = 1;

  std::shared_ptr<const FftPlan> inner_;
  std::vector<Complex> chirp_;       // exp(-i pi k^2 / n)
  std::vector<Complex> kernel_fft_;  // transform of the conjugate chirp, wrapped
};

/// Shared, lazily built plan for length n. Thread-safe.
std::shared_ptr<const FftPlan> fft_plan(std::size_t n);

/// Row-major grid of complex DFT coefficients. Index (m, n) holds the bin with
/// horizontal frequency m in [0, width) and vertical frequency n in [0, height).
struct ComplexSpectrum {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<Complex> values;

  const Complex& operator()(std::size_t m, std::size_t n) const noexcept {
    return values[n * width + m];
  }
  Complex& operator()(std::size_t m, std::size_t n) noexcept { return values[n * width + m]; }
};

/// F(m, n) = sum_x sum_y f(x, y) exp(-2 pi i (m x / W + n y / H)).
ComplexSpectrum dft2(const GrayImage& img);
/// Same transform on an arbitrary complex grid (row-major, width x height).
ComplexSpectrum dft2(std::size_t width, std::size_t height, std::vector<Complex> values);
/// Normalized inverse of dft2.
std::vector<Complex> idft2(const ComplexSpectrum& spectrum);

}  // namespace ghostdet
