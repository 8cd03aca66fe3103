#include <doctest.h>

#include <numeric>

#include "ghostdet/fft.hpp"
#include "oracles.hpp"

using namespace ghostdet;

TEST_CASE("1D plans match the direct sum for assorted lengths") {
  // Covers radix 2/4, odd primes, composite mixes and Bluestein lengths.
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 12u, 19u, 30u, 61u, 67u, 97u, 128u, 133u,
                        134u, 266u, 210u, 251u}) {
    ghostdet::Rng rng(n);
    std::vector<Complex> x(n);
    for (auto& v : x) v = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
    auto y = x;
    fft_plan(n)->forward(y);
    CHECK_MESSAGE(oracle::relative_frobenius(y, oracle::naive_dft(x)) < 1e-12, "n = ", n);
    fft_plan(n)->inverse(y);
    CHECK(oracle::relative_frobenius(y, x) < 1e-12);
  }
}

TEST_CASE("plans pick mixed radix for smooth lengths and Bluestein otherwise") {
  CHECK_FALSE(fft_plan(266)->uses_bluestein());
  CHECK(fft_plan(266)->factors() == std::vector<std::size_t>{2, 7, 19});
  CHECK(fft_plan(532)->factors() == std::vector<std::size_t>{4, 7, 19});
  CHECK(fft_plan(67)->uses_bluestein());
  CHECK(fft_plan(134)->uses_bluestein());
}

TEST_CASE("dft2 of a constant image concentrates in the DC bin") {
  const double c = 0.3;
  const GrayImage img(6, 5, c);
  const auto F = dft2(img);
  CHECK(std::abs(F(0, 0) - Complex(c * 30, 0)) < 1e-9);
  for (std::size_t i = 1; i < F.values.size(); ++i) CHECK(std::abs(F.values[i]) < 1e-9);
}

TEST_CASE("dft2 of a unit impulse is flat") {
  std::vector<double> px(7 * 9, 0.0);
  px[0] = 1.0;
  const auto F = dft2(GrayImage(7, 9, std::move(px)));
  for (const auto& v : F.values) {
    CHECK(v.real() == 1.0);
    CHECK(v.imag() == 0.0);
  }
}

TEST_CASE("dft2 matches the definition on a random 7 x 13 image") {
  const auto img = oracle::random_image(7, 13, 99);
  CHECK(oracle::relative_frobenius(dft2(img).values, oracle::naive_dft2(img)) < 1e-9);
}

TEST_CASE("dft2 properties") {
  SUBCASE("conjugate symmetry on real input") {
    for (auto [w, h] : {std::pair{7u, 7u}, {8u, 8u}, {16u, 19u}, {266u, 266u}}) {
      const auto F = dft2(oracle::random_image(w, h, w * 31 + h));
      for (std::size_t n = 0; n < h; ++n) {
        for (std::size_t m = 0; m < w; ++m) {
          CHECK(std::abs(F((w - m) % w, (h - n) % h) - std::conj(F(m, n))) < 1e-9);
        }
      }
    }
  }
  SUBCASE("Parseval") {
    for (auto [w, h] : {std::pair{7u, 7u}, {8u, 8u}, {16u, 19u}, {266u, 266u}}) {
      const auto img = oracle::random_image(w, h, w + h);
      double spatial = 0.0;
      for (double v : img.pixels()) spatial += v * v;
      double spectral = 0.0;
      for (const auto& v : dft2(img).values) spectral += std::norm(v);
      spectral /= static_cast<double>(w * h);
      CHECK(std::abs(spatial - spectral) / spatial < 1e-6);
    }
  }
  SUBCASE("linearity") {
    const auto f = oracle::random_image(12, 10, 1);
    const auto g = oracle::random_image(12, 10, 2);
    const double a = 0.3, b = 0.6;
    std::vector<double> mix(f.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * f.pixels()[i] + b * g.pixels()[i];
    const auto lhs = dft2(GrayImage(12, 10, std::move(mix)));
    const auto F = dft2(f);
    const auto G = dft2(g);
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      CHECK(std::abs(lhs.values[i] - (a * F.values[i] + b * G.values[i])) < 1e-9);
    }
  }
  SUBCASE("circular shift leaves magnitudes unchanged") {
    const auto f = oracle::random_image(20, 20, 5);
    const auto F = dft2(f);
    const auto S = dft2(translate(f, 7, 3));
    for (std::size_t i = 0; i < F.values.size(); ++i) {
      CHECK(std::abs(std::abs(F.values[i]) - std::abs(S.values[i])) < 1e-9);
    }
  }
  SUBCASE("idft2 inverts dft2") {
    const auto f = oracle::random_image(14, 9, 8);
    const auto back = idft2(dft2(f));
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(std::abs(back[i] - Complex(f.pixels()[i], 0)) < 1e-12);
    }
  }
}
