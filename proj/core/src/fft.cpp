#include "ghostdet/fft.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "ghostdet/error.hpp"

namespace ghostdet {

namespace {

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> out;
  while (n % 4 == 0) {
    out.push_back(4);
    n /= 4;
  }
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      out.push_back(p);
      n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

// exp(-2 pi i num / den), reduced so the angle stays within one octant for accuracy.
Complex unit_root(std::size_t num, std::size_t den) {
  num %= den;
  const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(num) /
                            static_cast<long double>(den);
  return {static_cast<double>(std::cos(angle)), static_cast<double>(std::sin(angle))};
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw ArgumentError("FFT length must be positive");
  const auto factors = factorize(n);
  const bool direct = std::all_of(factors.begin(), factors.end(),
                                  [](std::size_t f) { return f <= kMaxDirectRadix; });
  if (direct) {
    factors_ = factors;
    max_radix_ = factors_.empty() ? 1 : *std::max_element(factors_.begin(), factors_.end());
    twiddles_.resize(n);
    for (std::size_t t = 0; t < n; ++t) twiddles_[t] = unit_root(t, n);
    return;
  }

  const std::size_t len = next_pow2(2 * n - 1);
  inner_ = fft_plan(len);
  chirp_.resize(n);
  // k^2 mod 2n, accumulated as (k-1)^2 + 2k - 1, keeps the angle small and
  // avoids overflow.
  std::size_t k2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) k2 = (k2 + 2 * k - 1) % (2 * n);
    chirp_[k] = unit_root(k2, 2 * n);
  }
  kernel_fft_.assign(len, Complex{});
  kernel_fft_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    kernel_fft_[k] = std::conj(chirp_[k]);
    kernel_fft_[len - k] = std::conj(chirp_[k]);
  }
  inner_->forward(kernel_fft_);
}

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_) throw DimensionError("FFT input length does not match plan");
  if (n_ == 1) return;
  if (inner_) {
    bluestein(data);
    return;
  }
  std::vector<Complex> in(data.begin(), data.end());
  std::vector<Complex> scratch(max_radix_);
  mixed_radix(in.data(), data.data(), n_, 1, 0, scratch.data());
}

void FftPlan::inverse(std::span<Complex> data) const {
  for (auto& v : data) v = std::conj(v);
  forward(data);
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v = std::conj(v) * scale;
}

void FftPlan::mixed_radix(const Complex* in, Complex* out, std::size_t n, std::size_t stride,
                          std::size_t level, Complex* scratch) const {
  const std::size_t p = factors_[level];
  const std::size_t m = n / p;
  if (m == 1) {
    for (std::size_t j = 0; j < p; ++j) out[j] = in[j * stride];
  } else {
    for (std::size_t j = 0; j < p; ++j) {
      mixed_radix(in + j * stride, out + j * m, m, stride * p, level + 1, scratch);
    }
  }
  butterfly(out, p, m, n, scratch);
}

// Combines p interleaved sub-transforms of length m into one of length n = p m:
//   X[k + q m] = sum_j W_n^{j k} W_p^{j q} Y_j[k].
void FftPlan::butterfly(Complex* out, std::size_t p, std::size_t m, std::size_t n,
                        Complex* scratch) const {
  const std::size_t tw_stride = n_ / n;
  const std::size_t root_stride = n_ / p;
  for (std::size_t k = 0; k < m; ++k) {
    scratch[0] = out[k];
    for (std::size_t j = 1; j < p; ++j) {
      scratch[j] = k == 0 ? out[j * m] : out[j * m + k] * twiddles_[j * k * tw_stride];
    }
    switch (p) {
      case 2: {
        out[k] = scratch[0] + scratch[1];
        out[k + m] = scratch[0] - scratch[1];
        break;
      }
      case 4: {
        const Complex a = scratch[0] + scratch[2];
        const Complex b = scratch[0] - scratch[2];
        const Complex c = scratch[1] + scratch[3];
        const Complex d = scratch[1] - scratch[3];
        const Complex d_rot(d.imag(), -d.real());  // -i * d
        out[k] = a + c;
        out[k + m] = b + d_rot;
        out[k + 2 * m] = a - c;
        out[k + 3 * m] = b - d_rot;
        break;
      }
      default: {
        // Odd prime radix: pair j with p - j so each root is applied once to
        // the sum and once to the difference.
        const std::size_t half = (p - 1) / 2;
        Complex dc = scratch[0];
        for (std::size_t j = 1; j <= half; ++j) {
          const Complex s = scratch[j] + scratch[p - j];
          const Complex d = scratch[j] - scratch[p - j];
          dc += s;
          scratch[j] = s;
          scratch[p - j] = d;
        }
        for (std::size_t q = 1; q <= half; ++q) {
          double re = scratch[0].real();
          double im = scratch[0].imag();
          double rot_re = 0.0;
          double rot_im = 0.0;
          std::size_t e = 0;  // j * q mod p
          for (std::size_t j = 1; j <= half; ++j) {
            e += q;
            if (e >= p) e -= p;
            const Complex w = twiddles_[e * root_stride];
            const Complex& s = scratch[j];
            const Complex& d = scratch[p - j];
            re += w.real() * s.real();
            im += w.real() * s.imag();
            // i * sin(theta) * d, with w.imag() = sin(theta)
            rot_re -= w.imag() * d.imag();
            rot_im += w.imag() * d.real();
          }
          out[k + q * m] = Complex(re + rot_re, im + rot_im);
          out[k + (p - q) * m] = Complex(re - rot_re, im - rot_im);
        }
        out[k] = dc;
        break;
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> data) const {
  const std::size_t len = inner_->size();
  std::vector<Complex> work(len, Complex{});
  for (std::size_t k = 0; k < n_; ++k) work[k] = data[k] * chirp_[k];
  inner_->forward(work);
  for (std::size_t i = 0; i < len; ++i) work[i] *= kernel_fft_[i];
  inner_->inverse(work);
  for (std::size_t k = 0; k < n_; ++k) data[k] = work[k] * chirp_[k];
}

std::shared_ptr<const FftPlan> fft_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  // Built outside the lock: Bluestein plans recursively request their inner plan.
  auto plan = std::make_shared<const FftPlan>(n);
  std::lock_guard lock(mutex);
  return cache.emplace(n, std::move(plan)).first->second;
}

ComplexSpectrum dft2(std::size_t width, std::size_t height, std::vector<Complex> values) {
  if (width == 0 || height == 0 || values.size() != width * height) {
    throw DimensionError("dft2: grid size does not match dimensions");
  }
  ComplexSpectrum out{width, height, std::move(values)};
  const auto row_plan = fft_plan(width);
  for (std::size_t y = 0; y < height; ++y) {
    row_plan->forward(std::span<Complex>(out.values).subspan(y * width, width));
  }
  const auto col_plan = fft_plan(height);
  std::vector<Complex> column(height);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = out.values[y * width + x];
    col_plan->forward(column);
    for (std::size_t y = 0; y < height; ++y) out.values[y * width + x] = column[y];
  }
  return out;
}

ComplexSpectrum dft2(const GrayImage& img) {
  const std::size_t width = img.width();
  const std::size_t height = img.height();
  ComplexSpectrum out{width, height, std::vector<Complex>(width * height)};

  // Real rows are transformed two at a time: z = a + i b gives
  // A[k] = (Z[k] + conj Z[-k]) / 2 and B[k] = (Z[k] - conj Z[-k]) / 2i.
  const auto row_plan = fft_plan(width);
  std::vector<Complex> packed(width);
  for (std::size_t y = 0; y < height; y += 2) {
    const bool pair = y + 1 < height;
    const auto a = img.row(y);
    for (std::size_t x = 0; x < width; ++x) {
      packed[x] = Complex(a[x], pair ? img(x, y + 1) : 0.0);
    }
    row_plan->forward(packed);
    Complex* ra = out.values.data() + y * width;
    Complex* rb = pair ? out.values.data() + (y + 1) * width : nullptr;
    for (std::size_t k = 0; k < width; ++k) {
      const Complex z = packed[k];
      const Complex zc = std::conj(packed[(width - k) % width]);
      ra[k] = 0.5 * (z + zc);
      if (rb) {
        const Complex d = z - zc;
        rb[k] = Complex(0.5 * d.imag(), -0.5 * d.real());
      }
    }
  }

  const auto col_plan = fft_plan(height);
  std::vector<Complex> column(height);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = out.values[y * width + x];
    col_plan->forward(column);
    for (std::size_t y = 0; y < height; ++y) out.values[y * width + x] = column[y];
  }
  return out;
}

std::vector<Complex> idft2(const ComplexSpectrum& spectrum) {
  const auto width = spectrum.width;
  const auto height = spectrum.height;
  std::vector<Complex> out = spectrum.values;
  const auto row_plan = fft_plan(width);
  for (std::size_t y = 0; y < height; ++y) {
    row_plan->inverse(std::span<Complex>(out).subspan(y * width, width));
  }
  const auto col_plan = fft_plan(height);
  std::vector<Complex> column(height);
  for (std::size_t x = 0; x < width; ++x) {
    for (std::size_t y = 0; y < height; ++y) column[y] = out[y * width + x];
    col_plan->inverse(column);
    for (std::size_t y = 0; y < height; ++y) out[y * width + x] = column[y];
  }
  return out;
}

}  // namespace ghostdet
