#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ghostdet/ghost.hpp"
#include "ghostdet/image.hpp"
#include "ghostdet/spectral.hpp"

namespace ghostdet {

enum class Split { train, val, test };
enum class Corruption { none, ghost, blur };
/// binary: aligned vs corrupted. intensity: one class per misaligned count k.
enum class LabelTask { binary, intensity };

std::string_view to_string(Split split);
std::string_view to_string(Corruption corruption);
std::string_view to_string(LabelTask task);
Split parse_split(std::string_view text);
Corruption parse_corruption(std::string_view text);
LabelTask parse_task(std::string_view text);

inline constexpr std::size_t kDefaultPatchSize = 266;
inline constexpr double kDefaultExponentSpread = 0.25;

struct DatasetSpec {
  std::size_t n_images = 100;
  std::size_t image_size = 532;
  MirrorConfig mirror;
  OffsetMode offset_mode = OffsetMode::proportional;
  TranslationMode translation = TranslationMode::circular;
  Corruption corruption = Corruption::ghost;
  LabelTask task = LabelTask::intensity;
  std::vector<double> blur_sigmas = {1, 2, 3, 4, 5};
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  double spectral_exponent = kDefaultSpectralExponent;
  /// Each procedural image draws its exponent uniformly from
  /// spectral_exponent +/- spread (floored at 0), so scenes differ in roughness.
  double spectral_exponent_spread = kDefaultExponentSpread;
  std::uint64_t seed = 0;
  /// Optional PGM/PPM ground images used instead of procedural ones; sample i
  /// takes source i mod count, center-cropped to image_size.
  std::vector<std::filesystem::path> source_images;
  std::size_t jobs = 1;
};

/// Class count implied by a DatasetSpec's corruption and task.
std::size_t class_count(const DatasetSpec& spec);

struct ManifestRecord {
  std::string path;  // relative to the manifest directory
  int n_segments = 4;
  int k = 0;
  double intensity = 0.0;
  int tx = 0;
  int ty = 0;
  Split split = Split::train;
  Corruption corruption = Corruption::none;
  std::optional<double> blur_sigma;
  std::uint64_t seed = 0;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory the record paths are relative to
  std::string rng_algorithm;
  std::vector<ManifestRecord> records;

  std::filesystem::path image_path(const ManifestRecord& r) const { return root / r.path; }
};

/// Class index of a record for a classifier with `n_classes` outputs: with 2
/// classes any corruption maps to 1, otherwise the label is k.
int label_for(const ManifestRecord& record, std::size_t n_classes);

/// Synthesizes the images under out_dir/images and writes out_dir/manifest.csv.
DatasetManifest generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root);

/// One featurized patch of a manifest image.
struct PatchSample {
  std::size_t record = 0;  // index into manifest.records
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
  FeatureVector features;
};

/// Featurizes every patch of every record in `split` (all records when
/// absent), in record then patch order.
std::vector<PatchSample> featurize_manifest(const DatasetManifest& manifest,
                                            std::size_t patch_size,
                                            std::optional<Split> split = std::nullopt,
                                            std::size_t jobs = 1);

/// Feature vectors of every patch of one image, row-major patch order.
std::vector<PatchSample> featurize_image(const GrayImage& img, std::size_t patch_size,
                                         std::size_t jobs = 1);

}  // namespace ghostdet
