#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ghostdet/image.hpp"

namespace ghostdet::pnm {

/// Binary netpbm codecs ("P5" gray, "P6" color) at 8 bits per sample.
/// Intensity i is stored as round(i * 255); sample b decodes to b / maxval.

std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const RgbImage& img);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

/// Reads a P5 or P6 file; color input goes through to_grayscale.
GrayImage read_gray(const std::filesystem::path& path);

/// Quantizes `img` to the 8-bit grid, i.e. decode(encode(img)).
GrayImage quantize8(const GrayImage& img);

}  // namespace ghostdet::pnm
