#include <doctest.h>

#include <algorithm>
#include <set>

#include "ghostdet/error.hpp"
#include "ghostdet/image.hpp"
#include "oracles.hpp"

using namespace ghostdet;

TEST_CASE("GrayImage rejects out-of-range and mis-sized input") {
  CHECK_THROWS_AS(GrayImage(0, 3), ArgumentError);
  CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>{0.1, 0.2, 1.5, 0.0}), ArgumentError);
  CHECK_THROWS_AS(GrayImage(2, 2, std::vector<double>{0.1, 0.2, 0.3}), DimensionError);
  CHECK_THROWS_AS(GrayImage(1, 1, std::vector<double>{std::nan("")}), ArgumentError);
}

TEST_CASE("to_grayscale uses BT.601 weights") {
  const GrayImage half(3, 2, 0.5);
  const GrayImage zero(3, 2, 0.0);
  const GrayImage one(3, 2, 1.0);
  const auto gray = to_grayscale(half, half, half);
  for (double v : gray.pixels()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  const auto black = to_grayscale(zero, zero, zero);
  for (double v : black.pixels()) CHECK(v == 0.0);
  const auto red = to_grayscale(one, zero, zero);
  for (double v : red.pixels()) CHECK(v == doctest::Approx(0.299).epsilon(1e-15));
  CHECK_THROWS_AS(to_grayscale(one, GrayImage(2, 2), zero), DimensionError);
}

TEST_CASE("translate") {
  const GrayImage img(2, 2, std::vector<double>{0.1, 0.2, 0.3, 0.4});  // [[a,b],[c,d]]

  SUBCASE("zero offset is the identity") {
    CHECK(translate(img, 0, 0) == img);
    CHECK(translate(img, 0, 0, TranslationMode::zero_fill) == img);
  }
  SUBCASE("circular shift by one column swaps columns") {
    const auto out = translate(img, 1, 0);
    CHECK(out.pixels()[0] == 0.2);
    CHECK(out.pixels()[1] == 0.1);
    CHECK(out.pixels()[2] == 0.4);
    CHECK(out.pixels()[3] == 0.3);
  }
  SUBCASE("zero fill reads zeros outside the source") {
    const auto out = translate(img, 1, 0, TranslationMode::zero_fill);
    CHECK(out.pixels()[0] == 0.0);
    CHECK(out.pixels()[1] == 0.1);
    CHECK(out.pixels()[2] == 0.0);
    CHECK(out.pixels()[3] == 0.3);
  }
  SUBCASE("offsets outside [0, min(w, h)) are rejected") {
    CHECK_THROWS_AS(translate(img, 2, 0), ArgumentError);
    CHECK_THROWS_AS(translate(img, -1, 0), ArgumentError);
    CHECK_THROWS_AS(translate(img, 0, 2), ArgumentError);
  }
  SUBCASE("circular translation is inverted by the complementary shift") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ghostdet::Rng rng(seed);
      const auto side = static_cast<int>(rng.uniform_int(2, 40));
      const int tx = static_cast<int>(rng.uniform_int(1, side - 1));
      const int ty = static_cast<int>(rng.uniform_int(1, side - 1));
      const auto f = oracle::random_image(side, side, seed);
      CHECK(translate(translate(f, tx, ty), side - tx, side - ty) == f);
    }
  }
}

TEST_CASE("blend") {
  const auto a = oracle::random_image(9, 7, 1);
  const auto b = oracle::random_image(9, 7, 2);
  CHECK(blend(a, b, 0.0) == a);
  CHECK(blend(a, b, 1.0) == b);

  const GrayImage o(1, 1, 0.8);
  const GrayImage c(1, 1, 0.4);
  CHECK(blend(o, c, 0.25)(0, 0) == doctest::Approx(0.7).epsilon(1e-15));

  CHECK_THROWS_AS(blend(a, GrayImage(7, 9), 0.5), DimensionError);
  CHECK_THROWS_AS(blend(a, b, 1.5), ArgumentError);
  CHECK_THROWS_AS(blend(a, b, -0.1), ArgumentError);

  // Pointwise convexity on random draws.
  for (double intensity : {0.1, 0.33, 0.5, 0.9}) {
    const auto out = blend(a, b, intensity);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out.pixels()[i] >= std::min(a.pixels()[i], b.pixels()[i]));
      CHECK(out.pixels()[i] <= std::max(a.pixels()[i], b.pixels()[i]));
    }
  }
}

TEST_CASE("gaussian_blur") {
  CHECK_THROWS_AS(gaussian_blur(GrayImage(8, 8), 0.0), ArgumentError);
  CHECK_THROWS_AS(gaussian_blur(GrayImage(8, 8), -1.0), ArgumentError);

  SUBCASE("kernel is normalized with radius ceil(3 sigma)") {
    for (double sigma : {0.3, 1.0, 2.5, 5.0}) {
      const auto k = gaussian_kernel(sigma);
      CHECK(k.size() == 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
      double total = 0;
      for (double v : k) total += v;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
  SUBCASE("constant image is unchanged") {
    const auto out = gaussian_blur(GrayImage(20, 13, 0.37), 2.0);
    for (double v : out.pixels()) CHECK(std::abs(v - 0.37) < 1e-9);
  }
  SUBCASE("impulse response at the center is the squared center tap") {
    std::vector<double> px(31 * 31, 0.0);
    px[15 * 31 + 15] = 1.0;
    const auto out = gaussian_blur(GrayImage(31, 31, std::move(px)), 1.0);
    // 1 / (1 + 2 (e^-1/2 + e^-2 + e^-9/2)), squared; evaluated by hand.
    CHECK(out(15, 15) == doctest::Approx(0.15924112569070245).epsilon(1e-12));
  }
  SUBCASE("range never grows and the mean is kept away from borders") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto f = oracle::random_image(40, 33, seed);
      const auto out = gaussian_blur(f, 1.0 + seed);
      const auto [lo, hi] = std::minmax_element(f.pixels().begin(), f.pixels().end());
      for (double v : out.pixels()) {
        CHECK(v >= *lo);
        CHECK(v <= *hi);
      }
    }
    // Replicated borders preserve the mean exactly when the image is constant
    // near its edges.
    std::vector<double> px(64 * 64, 0.5);
    px[32 * 64 + 32] = 0.9;
    px[30 * 64 + 28] = 0.1;
    const GrayImage f(64, 64, std::move(px));
    CHECK(std::abs(gaussian_blur(f, 3.0).mean() - f.mean()) < 1e-6);
  }
}

TEST_CASE("extract_patches") {
  SUBCASE("2448 x 2448 at 266 gives a 9 x 9 grid") {
    const GrayImage img(2448, 2448, 0.5);
    const auto set = extract_patches(img, 266);
    CHECK(set.grid.rows == 9);
    CHECK(set.grid.cols == 9);
    CHECK(set.patches.size() == 81);
    CHECK(2448 - 9 * 266 == 54);
  }
  SUBCASE("single patch equals its input") {
    const auto img = oracle::random_image(266, 266, 4);
    const auto set = extract_patches(img, 266);
    REQUIRE(set.patches.size() == 1);
    CHECK(set.patches[0] == img);
  }
  SUBCASE("531 x 266 fits one patch") {
    CHECK(extract_patches(GrayImage(531, 266), 266).patches.size() == 1);
  }
  SUBCASE("oversized patch is rejected") {
    CHECK_THROWS_AS(extract_patches(GrayImage(100, 300), 101), ArgumentError);
  }
  SUBCASE("patches tile a sub-rectangle without gaps or overlap") {
    const std::size_t w = 53, h = 41, p = 10;
    std::vector<double> px(w * h);
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(i) / static_cast<double>(px.size());
    const GrayImage img(w, h, std::move(px));
    const auto set = extract_patches(img, p);
    CHECK(set.grid.rows == 4);
    CHECK(set.grid.cols == 5);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < set.patches.size(); ++k) {
      const auto [oy, ox] = set.grid.origins[k];
      CHECK(oy == (k / set.grid.cols) * p);
      CHECK(ox == (k % set.grid.cols) * p);
      for (std::size_t y = 0; y < p; ++y) {
        for (std::size_t x = 0; x < p; ++x) {
          CHECK(set.patches[k](x, y) == img(ox + x, oy + y));
          CHECK(seen.insert((oy + y) * w + ox + x).second);
        }
      }
    }
    CHECK(seen.size() == 40 * 50);
  }
}
