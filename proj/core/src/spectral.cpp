#include "ghostdet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ghostdet/error.hpp"

namespace ghostdet {

MagnitudeSpectrum magnitude_spectrum(const ComplexSpectrum& spectrum) {
  const auto w = spectrum.width;
  const auto h = spectrum.height;
  MagnitudeSpectrum out{w, h, std::vector<double>(w * h)};
  // fftshift: bin (m, n) moves to ((m + w/2) mod w, (n + h/2) mod h).
  for (std::size_t n = 0; n < h; ++n) {
    const std::size_t y = (n + h / 2) % h;
    for (std::size_t m = 0; m < w; ++m) {
      const std::size_t x = (m + w / 2) % w;
      out.values[y * w + x] = std::log1p(std::sqrt(std::norm(spectrum(m, n))));
    }
  }
  return out;
}

MagnitudeSpectrum magnitude_spectrum(const GrayImage& img) { return magnitude_spectrum(dft2(img)); }

GrayImage spectrum_image(const MagnitudeSpectrum& spectrum) {
  const auto [lo, hi] = std::minmax_element(spectrum.values.begin(), spectrum.values.end());
  const double range = *hi - *lo;
  std::vector<double> px(spectrum.values.size(), 0.0);
  if (range > 0.0) {
    for (std::size_t i = 0; i < px.size(); ++i) {
      px[i] = std::clamp((spectrum.values[i] - *lo) / range, 0.0, 1.0);
    }
  }
  return GrayImage(spectrum.width, spectrum.height, std::move(px));
}

RealGrid laplacian(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) {
    throw ArgumentError("laplacian needs at least a 3x3 image");
  }
  RealGrid out{img.width() - 2, img.height() - 2, {}};
  out.values.resize(out.width * out.height);
  for (std::size_t y = 1; y + 1 < img.height(); ++y) {
    for (std::size_t x = 1; x + 1 < img.width(); ++x) {
      out.values[(y - 1) * out.width + (x - 1)] =
          img(x, y - 1) + img(x - 1, y) - 4.0 * img(x, y) + img(x + 1, y) + img(x, y + 1);
    }
  }
  return out;
}

double laplacian_variance(const GrayImage& img) {
  const auto response = laplacian(img);
  const auto n = static_cast<double>(response.values.size());
  double mean = 0.0;
  for (double v : response.values) mean += v;
  mean /= n;
  double acc = 0.0;
  for (double v : response.values) acc += (v - mean) * (v - mean);
  return acc / n;
}

RadialProfile radial_bins(const MagnitudeSpectrum& spectrum, std::size_t n_bins) {
  if (n_bins < 2) throw ArgumentError("radial_bins needs at least 2 bins");
  const auto w = spectrum.width;
  const auto h = spectrum.height;
  const double cx = static_cast<double>(w / 2);
  const double cy = static_cast<double>(h / 2);
  const double max_dx = std::max(cx, static_cast<double>(w - 1) - cx);
  const double max_dy = std::max(cy, static_cast<double>(h - 1) - cy);
  const double max_dist = std::hypot(max_dx, max_dy);

  std::vector<double> sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  std::vector<std::size_t> bin_of(w * h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t bin = 0;
      if (max_dist > 0.0) {
        const double dx = static_cast<double>(x) - cx;
        const double dy = static_cast<double>(y) - cy;
        const double r = std::sqrt(dx * dx + dy * dy) / max_dist;
        bin = std::min(static_cast<std::size_t>(r * static_cast<double>(n_bins)), n_bins - 1);
      }
      bin_of[y * w + x] = bin;
      sum[bin] += spectrum.values[y * w + x];
      ++count[bin];
    }
  }

  RadialProfile out{std::vector<double>(n_bins, 0.0), std::vector<double>(n_bins, 0.0),
                    std::vector<bool>(n_bins, true)};
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] > 0) {
      out.means[b] = sum[b] / static_cast<double>(count[b]);
      out.empty[b] = false;
    }
  }
  // Second pass for the deviations keeps the variance free of cancellation.
  std::vector<double> sq(n_bins, 0.0);
  for (std::size_t i = 0; i < bin_of.size(); ++i) {
    const double d = spectrum.values[i] - out.means[bin_of[i]];
    sq[bin_of[i]] += d * d;
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (count[b] > 0) out.stds[b] = std::sqrt(sq[b] / static_cast<double>(count[b]));
  }
  return out;
}

std::string feature_fingerprint(std::size_t patch_size) {
  // FNV-1a over a canonical description of the layout.
  const std::string desc = "ghostdet-features;layout=" + std::to_string(kFeatureLayoutVersion) +
                           ";bins=" + std::to_string(kRadialBins) +
                           ";patch=" + std::to_string(patch_size);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : desc) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

FeatureVector featurize(const GrayImage& patch) {
  if (patch.width() != patch.height()) throw ArgumentError("featurize expects a square patch");
  if (patch.width() < 16) throw ArgumentError("featurize expects a patch side of at least 16");

  const auto profile = radial_bins(magnitude_spectrum(patch), kRadialBins);
  FeatureVector fv;
  std::copy(profile.means.begin(), profile.means.end(), fv.values.begin());
  std::copy(profile.stds.begin(), profile.stds.end(), fv.values.begin() + kRadialBins);
  fv.values[FeatureVector::kLaplacianVariance] = laplacian_variance(patch);
  fv.values[FeatureVector::kMean] = patch.mean();
  fv.values[FeatureVector::kStd] = patch.stddev();
  fv.fingerprint = feature_fingerprint(patch.width());
  return fv;
}

double high_frequency_energy(const FeatureVector& features) {
  double acc = 0.0;
  for (std::size_t b = kRadialBins - 8; b < kRadialBins; ++b) acc += features.values[b];
  return acc / 8.0;
}

bool threshold_detector(double metric, double threshold, ThresholdDirection direction) {
  if (!std::isfinite(metric) || !std::isfinite(threshold)) {
    throw ArgumentError("threshold_detector needs finite inputs");
  }
  return direction == ThresholdDirection::below_is_anomalous ? metric < threshold
                                                             : metric > threshold;
}

ThresholdSweep best_threshold(const std::vector<double>& metric, const std::vector<int>& labels) {
  if (metric.empty() || metric.size() != labels.size()) {
    throw ArgumentError("best_threshold needs matching non-empty metric and label lists");
  }
  std::vector<double> sorted = metric;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  candidates.push_back(sorted.back() + 1.0);

  ThresholdSweep best{0.0, ThresholdDirection::below_is_anomalous, -1.0};
  const auto n = static_cast<double>(metric.size());
  for (double t : candidates) {
    for (auto dir : {ThresholdDirection::below_is_anomalous, ThresholdDirection::above_is_anomalous}) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < metric.size(); ++i) {
        const bool predicted = threshold_detector(metric[i], t, dir);
        if (predicted == (labels[i] != 0)) ++correct;
      }
      const double acc = static_cast<double>(correct) / n;
      if (acc > best.accuracy) best = {t, dir, acc};
    }
  }
  return best;
}

}  // namespace ghostdet
