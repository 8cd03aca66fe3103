#include <doctest.h>

#include <filesystem>
#include <string>

#include "ghostdet/error.hpp"
#include "ghostdet/pnm.hpp"
#include "oracles.hpp"

using namespace ghostdet;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("PGM encoding is P5 with maxval 255 and rounds intensities") {
  const GrayImage img(3, 1, std::vector<double>{0.0, 0.5, 1.0});
  const auto bytes = pnm::encode_pgm(img);
  const std::string header = "P5\n3 1\n255\n";
  REQUIRE(bytes.size() == header.size() + 3);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  CHECK(bytes[header.size()] == 0);
  CHECK(bytes[header.size() + 1] == 128);  // round(127.5)
  CHECK(bytes[header.size() + 2] == 255);
}

TEST_CASE("decode inverts encode on the 8-bit grid") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto q = pnm::quantize8(oracle::random_image(17, 11, seed));
    CHECK(pnm::decode_pgm(pnm::encode_pgm(q)) == q);
    for (double v : q.pixels()) CHECK(std::abs(v * 255.0 - std::round(v * 255.0)) < 1e-9);
  }
}

TEST_CASE("PGM header comments and odd whitespace are accepted") {
  auto data = bytes_of("P5 # comment\n# another\n2\t1\n255\n");
  data.push_back(0);
  data.push_back(51);
  const auto img = pnm::decode_pgm(data);
  CHECK(img.width() == 2);
  CHECK(img.pixels()[1] == doctest::Approx(0.2));
}

TEST_CASE("malformed PGM input is a parse error") {
  CHECK_THROWS_AS(pnm::decode_pgm(bytes_of("P2\n1 1\n255\n0")), ParseError);
  CHECK_THROWS_AS(pnm::decode_pgm(bytes_of("P5\n4 4\n255\n\x01\x02")), ParseError);
  CHECK_THROWS_AS(pnm::decode_pgm(bytes_of("P5\n4 4\n65535\n")), ParseError);
  CHECK_THROWS_AS(pnm::decode_pgm(bytes_of("P5\nx 4\n255\n")), ParseError);
  CHECK_THROWS_AS(pnm::decode_pgm(bytes_of("")), ParseError);
  try {
    pnm::decode_pgm(bytes_of("P5\n4 4\n255\n\x01\x02"));
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }
}

TEST_CASE("PPM round trip and grayscale ingestion") {
  const auto dir = std::filesystem::temp_directory_path() / "ghostdet_pnm_test";
  std::filesystem::create_directories(dir);
  const RgbImage rgb{GrayImage(4, 3, 1.0), GrayImage(4, 3, 0.0), GrayImage(4, 3, 0.0)};
  pnm::write_ppm(dir / "red.ppm", rgb);
  const auto back = pnm::read_ppm(dir / "red.ppm");
  CHECK(back.red == rgb.red);
  CHECK(back.green == rgb.green);
  const auto gray = pnm::read_gray(dir / "red.ppm");
  for (double v : gray.pixels()) CHECK(v == doctest::Approx(0.299));
  CHECK_THROWS_AS(pnm::read_pgm(dir / "missing.pgm"), IoError);
  CHECK_THROWS_AS(pnm::decode_pgm(pnm::encode_ppm(rgb)), ParseError);
  std::filesystem::remove_all(dir);
}
