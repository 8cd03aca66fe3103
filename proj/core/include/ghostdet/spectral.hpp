#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ghostdet/fft.hpp"
#include "ghostdet/image.hpp"

namespace ghostdet {

/// log(1 + |F|), quadrant-shifted so the DC bin sits at (width / 2, height / 2).
struct MagnitudeSpectrum {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double operator()(std::size_t x, std::size_t y) const noexcept { return values[y * width + x]; }
};

MagnitudeSpectrum magnitude_spectrum(const GrayImage& img);
MagnitudeSpectrum magnitude_spectrum(const ComplexSpectrum& spectrum);

/// Linear rescale of the log-magnitudes to [0, 1], for export as PGM.
GrayImage spectrum_image(const MagnitudeSpectrum& spectrum);

/// Valid-region response to the 5-point kernel [0 1 0; 1 -4 1; 0 1 0].
/// Output is (width - 2) x (height - 2); throws ArgumentError below 3x3.
RealGrid laplacian(const GrayImage& img);

/// Population variance of laplacian(img).
double laplacian_variance(const GrayImage& img);

struct RadialProfile {
  std::vector<double> means;
  std::vector<double> stds;
  /// Annuli that received no spectrum bins (their mean and std are 0).
  std::vector<bool> empty;
};

/// Splits the spectrum into `n_bins` equal-width annuli by normalized radius
/// r = distance / max distance from the DC bin and summarizes each.
RadialProfile radial_bins(const MagnitudeSpectrum& spectrum, std::size_t n_bins);

inline constexpr std::size_t kRadialBins = 32;
inline constexpr std::size_t kFeatureLength = 2 * kRadialBins + 3;
inline constexpr int kFeatureLayoutVersion = 1;

/// Layout: 32 radial means, 32 radial stds, Laplacian variance, mean, std.
struct FeatureVector {
  std::array<double, kFeatureLength> values{};
  std::string fingerprint;

  static constexpr std::size_t kLaplacianVariance = 2 * kRadialBins;
  static constexpr std::size_t kMean = 2 * kRadialBins + 1;
  static constexpr std::size_t kStd = 2 * kRadialBins + 2;
};

/// Identifies the feature layout a vector (or model) was produced with.
std::string feature_fingerprint(std::size_t patch_size);

/// Feature vector of a square patch with side >= 16.
FeatureVector featurize(const GrayImage& patch);

/// Mean of the outer 8 radial mean bins, the scalar used by the spectral
/// threshold baseline.
double high_frequency_energy(const FeatureVector& features);

enum class ThresholdDirection { below_is_anomalous, above_is_anomalous };

/// Strict comparison: a metric equal to the threshold is never anomalous.
bool threshold_detector(double metric, double threshold, ThresholdDirection direction);

struct ThresholdSweep {
  double threshold = 0.0;
  ThresholdDirection direction = ThresholdDirection::below_is_anomalous;
  double accuracy = 0.0;
};

/// Exhaustive search over midpoints between sorted metric values (plus the
/// two outer extremes) and both directions; returns the best binary accuracy.
/// Ties keep the first candidate found (lowest threshold, below-direction first).
ThresholdSweep best_threshold(const std::vector<double>& metric, const std::vector<int>& labels);

}  // namespace ghostdet
