#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ghostdet/classifier.hpp"
#include "ghostdet/dataset.hpp"
#include "ghostdet/image.hpp"

namespace ghostdet {

inline constexpr double kDefaultTau = 0.5;

struct PatchVerdict {
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
  int predicted_class = 0;
  double max_probability = 0.0;

  friend bool operator==(const PatchVerdict&, const PatchVerdict&) = default;
};

/// Image-level misalignment verdict built from per-patch votes.
struct ImageVerdict {
  std::size_t n_patches = 0;
  /// Fraction of patches whose predicted class is nonzero.
  double ghosted_patch_fraction = 0.0;
  /// ghosted_patch_fraction >= tau.
  bool is_misaligned = false;
  /// Lower median of the nonzero patch classes; set iff is_misaligned.
  std::optional<int> estimated_k;
  std::vector<PatchVerdict> per_patch;

  friend bool operator==(const ImageVerdict&, const ImageVerdict&) = default;
};

/// Folds per-patch predictions into a verdict. The result depends only on the
/// multiset of votes, not their order; per_patch is kept in (row, col) order.
ImageVerdict aggregate_votes(std::vector<PatchVerdict> votes, double tau);

/// Runs the classifier on every patch of `img` and aggregates the votes.
ImageVerdict classify_image(const Model& model, const GrayImage& img,
                            std::size_t patch_size = kDefaultPatchSize, double tau = kDefaultTau,
                            std::size_t jobs = 1);

struct DetectionRow {
  std::string path;
  std::size_t n_patches = 0;
  double ghosted_fraction = 0.0;
  bool is_misaligned = false;
  std::optional<int> estimated_k;
  int true_k = 0;
  bool truly_corrupted = false;
  std::string error;  // non-empty when the image could not be processed
};

struct BatchDetection {
  std::vector<DetectionRow> rows;
  std::size_t n_images = 0;
  std::size_t failures = 0;
  /// Fraction of processed images whose is_misaligned matches the label.
  double image_accuracy = 0.0;
  /// Fraction of processed images whose estimated count (0 when aligned)
  /// equals the manifest k.
  double k_accuracy = 0.0;
  /// Binary aligned/misaligned metrics over processed images.
  std::optional<Metrics> image_metrics;
};

/// Classifies every manifest image (optionally one split). Unreadable images
/// become error rows and the run continues.
BatchDetection batch_detect(const Model& model, const DatasetManifest& manifest, double tau,
                            std::size_t patch_size = kDefaultPatchSize,
                            std::optional<Split> split = std::nullopt, std::size_t jobs = 1);

/// CSV with header path,n_patches,ghosted_fraction,is_misaligned,estimated_k,true_k.
std::string format_verdict_csv(const BatchDetection& detection);
/// {n_images, image_accuracy, k_accuracy, failures}
std::string format_detection_summary(const BatchDetection& detection);
std::string format_verdict_json(const ImageVerdict& verdict);

}  // namespace ghostdet
