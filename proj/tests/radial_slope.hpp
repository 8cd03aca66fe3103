#pragma once

#include <cmath>

#include "ghostdet/spectral.hpp"
#include "oracles.hpp"

namespace oracle {

/// Least-squares slope of the mean log-magnitude against log radius, using
/// 128 annuli and annuli 4..64 inclusive (about 1.4 px wide on a 256 grid).
inline double radial_loglog_slope(const ghostdet::GrayImage& img) {
  constexpr std::size_t kBins = 128;
  const auto spec = ghostdet::magnitude_spectrum(img);
  const auto profile = ghostdet::radial_bins(spec, kBins);
  const double half = static_cast<double>(img.width() / 2);
  const double max_dist = std::hypot(half, half);
  std::vector<double> x, y;
  for (std::size_t b = 4; b <= 64; ++b) {
    x.push_back(std::log((static_cast<double>(b) + 0.5) * max_dist / kBins));
    y.push_back(profile.means[b]);
  }
  return ls_slope(x, y);
}

}  // namespace oracle
