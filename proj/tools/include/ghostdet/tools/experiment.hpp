#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ghostdet/classifier.hpp"
#include "ghostdet/dataset.hpp"
#include "ghostdet/ghost.hpp"

namespace ghostdet::tools {

/// Settings shared by every cell of an experiment matrix.
struct PipelineConfig {
  std::size_t n_images = 200;
  std::size_t image_size = 532;
  std::size_t patch_size = kDefaultPatchSize;
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  double spectral_exponent = kDefaultSpectralExponent;
  double spectral_exponent_spread = kDefaultExponentSpread;
  double tau = 0.5;
  TrainConfig train;  // the seed is replaced per cell
  std::size_t jobs = 1;
};

/// One dataset + model: the binary task or an intensity task for one N and offset mode.
struct CellSpec {
  LabelTask task = LabelTask::binary;
  int n_segments = 4;
  OffsetMode offset_mode = OffsetMode::random;
  std::uint64_t seed = 1;

  /// Stable identifier such as "binary_n4_random" (seed excluded).
  std::string id() const;
};

struct BaselineResult {
  std::string metric;
  double threshold = 0.0;
  std::string direction;
  double accuracy = 0.0;
};

struct CellResult {
  CellSpec spec;
  std::string directory;  // relative to the run root
  std::uint64_t model_seed = 0;
  std::size_t n_classes = 0;
  std::size_t train_patches = 0;
  std::size_t val_patches = 0;
  std::size_t test_patches = 0;
  std::size_t best_epoch = 0;
  std::optional<double> patch_accuracy;
  std::optional<double> image_accuracy;
  std::vector<BaselineResult> baselines;
  std::string error;     // empty on success
  double seconds = 0.0;  // wall clock; never written to report files
};

/// Training seed derived from the dataset seed so the two never share a substream.
std::uint64_t model_seed_for(std::uint64_t seed);

DatasetSpec dataset_spec_for(const CellSpec& cell, const PipelineConfig& config);

/// Synthesizes, featurizes, trains and scores one cell under root / cell.id() / seed.
/// Failures are captured in CellResult::error.
CellResult run_cell(const CellSpec& cell, const PipelineConfig& config,
                    const std::filesystem::path& root);

struct ReportConfig {
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> mirror_counts = {4, 6, 8};
  int binary_segments = 4;
  double time_budget_seconds = 0.0;  // 0 disables the budget
};

struct SummaryStat {
  std::string id;
  std::string measure;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

struct RunReport {
  std::string experiment_id;
  ReportConfig config;
  std::vector<CellResult> cells;
  std::vector<SummaryStat> summary;

  const CellResult* find(const std::string& id, std::uint64_t seed) const;
};

/// Cells in execution order: per seed, the binary cell then N x {random, proportional}.
std::vector<CellSpec> report_cells(const ReportConfig& config);

/// Runs the whole matrix and writes report.md, report.json, seed_<s>/results.json
/// and timings.json under out_dir.
RunReport run_report(const ReportConfig& config, const std::filesystem::path& out_dir);

std::string format_report_markdown(const RunReport& report);
std::string format_report_json(const RunReport& report);
std::string format_seed_json(const RunReport& report, std::uint64_t seed);
std::string format_timings_json(const RunReport& report);

/// Reference accuracies from the pretrained-backbone study, for side-by-side display.
struct PublishedReference {
  static constexpr double binary = 0.9875;
  static std::optional<double> intensity(int n_segments, OffsetMode mode);
};

}  // namespace ghostdet::tools
