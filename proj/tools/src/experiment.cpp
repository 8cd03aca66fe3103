#include "ghostdet/tools/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "ghostdet/detector.hpp"
#include "ghostdet/error.hpp"
#include "ghostdet/random.hpp"
#include "ghostdet/spectral.hpp"
#include "text_file.hpp"

namespace ghostdet::tools {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string CellSpec::id() const {
  std::string out = task == LabelTask::binary ? "binary" : "intensity";
  out += "_n" + std::to_string(n_segments) + "_" + std::string(to_string(offset_mode));
  return out;
}

std::uint64_t model_seed_for(std::uint64_t seed) { return splitmix64(seed); }

DatasetSpec dataset_spec_for(const CellSpec& cell, const PipelineConfig& config) {
  DatasetSpec spec;
  spec.n_images = config.n_images;
  spec.image_size = config.image_size;
  spec.mirror.n_segments = cell.n_segments;
  spec.offset_mode = cell.offset_mode;
  spec.corruption = Corruption::ghost;
  spec.task = cell.task;
  spec.train_fraction = config.train_fraction;
  spec.val_fraction = config.val_fraction;
  spec.test_fraction = config.test_fraction;
  spec.spectral_exponent = config.spectral_exponent;
  spec.spectral_exponent_spread = config.spectral_exponent_spread;
  spec.seed = cell.seed;
  spec.jobs = config.jobs;
  return spec;
}

namespace {

std::string direction_name(ThresholdDirection d) {
  return d == ThresholdDirection::below_is_anomalous ? "below" : "above";
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

CellResult run_cell(const CellSpec& cell, const PipelineConfig& config, const fs::path& root) {
  CellResult result;
  result.spec = cell;
  result.directory = "seed_" + std::to_string(cell.seed) + "/" + cell.id();
  result.model_seed = model_seed_for(cell.seed);
  const auto start = std::chrono::steady_clock::now();
  try {
    const DatasetSpec spec = dataset_spec_for(cell, config);
    const std::size_t n_classes = class_count(spec);
    result.n_classes = n_classes;
    const fs::path dir = root / result.directory;
    const DatasetManifest manifest = generate_dataset(spec, dir);

    const auto samples = featurize_manifest(manifest, config.patch_size, std::nullopt, config.jobs);
    LabeledSet train_set, val_set, test_set;
    for (const auto& s : samples) {
      const ManifestRecord& rec = manifest.records[s.record];
      const int label = label_for(rec, n_classes);
      switch (rec.split) {
        case Split::train: train_set.add(s.features, label); break;
        case Split::val: val_set.add(s.features, label); break;
        case Split::test: test_set.add(s.features, label); break;
      }
    }
    result.train_patches = train_set.size();
    result.val_patches = val_set.size();
    result.test_patches = test_set.size();
    if (test_set.size() == 0) throw DataError("test split is empty");

    TrainConfig tc = config.train;
    tc.seed = result.model_seed;
    const TrainResult fitted = fit(train_set, val_set, n_classes, tc);
    save_model(fitted.model, dir / "model.json");
    result.best_epoch = fitted.best_epoch;
    result.patch_accuracy = evaluate(fitted.model, test_set).accuracy;

    if (cell.task == LabelTask::binary) {
      std::vector<double> lap, hf;
      for (const auto& f : test_set.features) {
        lap.push_back(f.values[FeatureVector::kLaplacianVariance]);
        hf.push_back(high_frequency_energy(f));
      }
      const auto add = [&](const char* name, const std::vector<double>& metric) {
        const ThresholdSweep sweep = best_threshold(metric, test_set.labels);
        result.baselines.push_back({name, sweep.threshold, direction_name(sweep.direction), sweep.accuracy});
      };
      add("laplacian_variance", lap);
      add("high_frequency_energy", hf);

      const BatchDetection det =
          batch_detect(fitted.model, manifest, config.tau, config.patch_size, Split::test, config.jobs);
      if (det.failures > 0) throw DataError(std::to_string(det.failures) + " test images failed detection");
      result.image_accuracy = det.image_accuracy;
    }
  } catch (const std::exception& e) {
    result.error = e.what();
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

const CellResult* RunReport::find(const std::string& id, std::uint64_t seed) const {
  for (const auto& c : cells) {
    if (c.spec.seed == seed && c.spec.id() == id) return &c;
  }
  return nullptr;
}

std::optional<double> PublishedReference::intensity(int n_segments, OffsetMode mode) {
  static const std::map<int, double> random = {{4, 0.6231}, {6, 0.5124}, {8, 0.3567}};
  static const std::map<int, double> proportional = {{4, 0.9859}, {6, 0.9850}, {8, 0.9805}};
  const auto& table = mode == OffsetMode::random ? random : proportional;
  const auto it = table.find(n_segments);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<CellSpec> report_cells(const ReportConfig& config) {
  std::vector<CellSpec> cells;
  for (const auto seed : config.seeds) {
    cells.push_back({LabelTask::binary, config.binary_segments, OffsetMode::random, seed});
    for (const int n : config.mirror_counts) {
      for (const auto mode : {OffsetMode::random, OffsetMode::proportional}) {
        cells.push_back({LabelTask::intensity, n, mode, seed});
      }
    }
  }
  return cells;
}

namespace {

std::optional<double> best_baseline(const CellResult& c) {
  std::optional<double> best;
  for (const auto& b : c.baselines) {
    if (!best || b.accuracy > *best) best = b.accuracy;
  }
  return best;
}

SummaryStat summarize(const std::string& id, const std::string& measure, const std::vector<double>& xs) {
  SummaryStat s{id, measure, 0.0, 0.0, xs.size()};
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::vector<SummaryStat> build_summary(const std::vector<CellResult>& cells) {
  std::vector<std::string> ids;
  for (const auto& c : cells) {
    if (std::find(ids.begin(), ids.end(), c.spec.id()) == ids.end()) ids.push_back(c.spec.id());
  }
  std::vector<SummaryStat> out;
  for (const auto& id : ids) {
    std::vector<double> patch, image, baseline;
    for (const auto& c : cells) {
      if (c.spec.id() != id || !c.error.empty()) continue;
      if (c.patch_accuracy) patch.push_back(*c.patch_accuracy);
      if (c.image_accuracy) image.push_back(*c.image_accuracy);
      if (const auto b = best_baseline(c)) baseline.push_back(*b);
    }
    out.push_back(summarize(id, "patch_accuracy", patch));
    if (!image.empty()) out.push_back(summarize(id, "image_accuracy", image));
    if (!baseline.empty()) out.push_back(summarize(id, "best_threshold_baseline", baseline));
  }
  return out;
}

ordered_json config_json(const ReportConfig& config) {
  const PipelineConfig& p = config.pipeline;
  ordered_json j;
  j["seeds"] = config.seeds;
  j["mirror_counts"] = config.mirror_counts;
  j["binary_segments"] = config.binary_segments;
  j["binary_offset_mode"] = "random";
  j["n_images"] = p.n_images;
  j["image_size"] = p.image_size;
  j["patch_size"] = p.patch_size;
  j["split"] = {{"train", p.train_fraction}, {"val", p.val_fraction}, {"test", p.test_fraction}};
  j["spectral_exponent"] = p.spectral_exponent;
  j["spectral_exponent_spread"] = p.spectral_exponent_spread;
  j["tau"] = p.tau;
  j["train"] = {{"learning_rate", p.train.learning_rate},
                {"momentum", p.train.momentum},
                {"batch_size", p.train.batch_size},
                {"epochs", p.train.epochs},
                {"l2", p.train.l2},
                {"early_stop_patience", p.train.early_stop_patience},
                {"hidden_dim", p.train.hidden_dim}};
  j["model_seed_rule"] = "splitmix64(dataset seed)";
  j["rng_algorithm"] = std::string(kRngAlgorithm);
  j["feature_layout"] = kFeatureLayoutVersion;
  j["time_budget_seconds"] = config.time_budget_seconds;
  return j;
}

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json cell_json(const CellResult& c) {
  ordered_json j;
  j["id"] = c.spec.id();
  j["task"] = std::string(to_string(c.spec.task));
  j["n_segments"] = c.spec.n_segments;
  j["offset_mode"] = std::string(to_string(c.spec.offset_mode));
  j["seed"] = c.spec.seed;
  j["model_seed"] = c.model_seed;
  j["manifest"] = c.directory + "/manifest.csv";
  j["model"] = c.directory + "/model.json";
  j["n_classes"] = c.n_classes;
  j["patches"] = {{"train", c.train_patches}, {"val", c.val_patches}, {"test", c.test_patches}};
  j["best_epoch"] = c.best_epoch;
  j["patch_accuracy"] = optional_json(c.patch_accuracy);
  j["image_accuracy"] = optional_json(c.image_accuracy);
  ordered_json baselines = ordered_json::array();
  for (const auto& b : c.baselines) {
    baselines.push_back({{"metric", b.metric},
                         {"threshold", b.threshold},
                         {"direction", b.direction},
                         {"accuracy", b.accuracy}});
  }
  j["baselines"] = baselines;
  j["error"] = c.error.empty() ? ordered_json(nullptr) : ordered_json(c.error);
  return j;
}

ordered_json reference_json(const ReportConfig& config) {
  ordered_json j;
  j["label"] = "paper (pretrained backbone)";
  j["binary"] = PublishedReference::binary;
  for (const auto mode : {OffsetMode::random, OffsetMode::proportional}) {
    ordered_json row = ordered_json::object();
    for (const int n : config.mirror_counts) {
      if (const auto v = PublishedReference::intensity(n, mode)) row[std::to_string(n)] = *v;
    }
    j["intensity_" + std::string(to_string(mode))] = row;
  }
  return j;
}

std::string cell_text(const CellResult* c, const std::optional<double> CellResult::*field) {
  if (c == nullptr) return "not run";
  if (!c->error.empty()) {
    std::string msg = c->error;
    std::replace(msg.begin(), msg.end(), '|', '/');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    return "error: " + msg;
  }
  const auto& v = c->*field;
  return v ? fixed4(*v) : "n/a";
}

const SummaryStat* find_stat(const RunReport& r, const std::string& id, const std::string& measure) {
  for (const auto& s : r.summary) {
    if (s.id == id && s.measure == measure) return &s;
  }
  return nullptr;
}

std::string stat_text(const SummaryStat* s) {
  if (s == nullptr || s->n == 0) return "n/a";
  return fixed4(s->mean) + " ± " + fixed4(s->stddev);
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? ", " : "") + std::to_string(seeds[i]);
  return out;
}

}  // namespace

std::string format_report_json(const RunReport& report) {
  ordered_json j;
  j["format_version"] = 1;
  j["experiment_id"] = report.experiment_id;
  j["config"] = config_json(report.config);
  ordered_json cells = ordered_json::array();
  for (const auto& c : report.cells) cells.push_back(cell_json(c));
  j["cells"] = cells;
  ordered_json summary = ordered_json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"id", s.id}, {"measure", s.measure}, {"mean", s.mean}, {"std", s.stddev}, {"n", s.n}});
  }
  j["summary"] = summary;
  j["reference"] = reference_json(report.config);
  return j.dump(2) + "\n";
}

std::string format_seed_json(const RunReport& report, std::uint64_t seed) {
  ordered_json j;
  j["format_version"] = 1;
  j["experiment_id"] = report.experiment_id;
  j["seed"] = seed;
  ordered_json cells = ordered_json::array();
  for (const auto& c : report.cells) {
    if (c.spec.seed == seed) cells.push_back(cell_json(c));
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string format_timings_json(const RunReport& report) {
  ordered_json j;
  j["experiment_id"] = report.experiment_id;
  ordered_json cells = ordered_json::array();
  double total = 0.0;
  for (const auto& c : report.cells) {
    cells.push_back({{"id", c.spec.id()}, {"seed", c.spec.seed}, {"seconds", c.seconds}});
    total += c.seconds;
  }
  j["cells"] = cells;
  j["total_seconds"] = total;
  return j.dump(2) + "\n";
}

std::string format_report_markdown(const RunReport& report) {
  const ReportConfig& cfg = report.config;
  const PipelineConfig& p = cfg.pipeline;
  const std::string ref_label = "paper (pretrained backbone)";
  std::ostringstream md;
  md << "# ghostdet experiment report\n\n";
  md << "Experiment `" << report.experiment_id << "`.\n\n";
  md << "- seeds: " << join_seeds(cfg.seeds) << "\n";
  md << "- datasets: " << p.n_images << " synthetic images of " << p.image_size << "x" << p.image_size
     << " (1/f^alpha fields, alpha uniform in " << p.spectral_exponent << " ± " << p.spectral_exponent_spread
     << "), split " << fixed4(p.train_fraction) << "/"
     << fixed4(p.val_fraction) << "/" << fixed4(p.test_fraction) << "\n";
  md << "- patches: " << p.patch_size << "x" << p.patch_size << ", " << kFeatureLength
     << " spectral and Laplacian features each\n";
  md << "- classifier: hidden " << p.train.hidden_dim << ", lr " << p.train.learning_rate << ", momentum "
     << p.train.momentum << ", batch " << p.train.batch_size << ", epochs " << p.train.epochs
     << ", patience " << p.train.early_stop_patience << "\n";
  md << "- image verdict: majority of patch votes, tau " << p.tau << "\n\n";
  md << "Accuracies are patch-level on the held-out test split unless marked otherwise. Rows labeled \""
     << ref_label << "\" quote published ResNet-101 results obtained with ImageNet-pretrained networks "
     << "on real imagery; they are shown for orientation and are not comparable pass marks.\n\n";

  const std::string binary_id = CellSpec{LabelTask::binary, cfg.binary_segments, OffsetMode::random, 0}.id();
  md << "## Binary detection (N=" << cfg.binary_segments << ", random offsets)\n\n";
  md << "| run | patch accuracy | image accuracy | best threshold baseline |\n";
  md << "|---|---|---|---|\n";
  for (const auto seed : cfg.seeds) {
    const CellResult* c = report.find(binary_id, seed);
    std::string base = "n/a";
    if (c && c->error.empty()) {
      if (const auto b = best_baseline(*c)) base = fixed4(*b);
    }
    md << "| seed " << seed << " | " << cell_text(c, &CellResult::patch_accuracy) << " | "
       << cell_text(c, &CellResult::image_accuracy) << " | " << base << " |\n";
  }
  md << "| mean ± std | " << stat_text(find_stat(report, binary_id, "patch_accuracy")) << " | "
     << stat_text(find_stat(report, binary_id, "image_accuracy")) << " | "
     << stat_text(find_stat(report, binary_id, "best_threshold_baseline")) << " |\n";
  md << "| " << ref_label << " | " << fixed4(PublishedReference::binary) << " | | |\n\n";

  for (const auto mode : {OffsetMode::random, OffsetMode::proportional}) {
    md << "## Intensity classification - "
       << (mode == OffsetMode::random ? "random offset" : "no random offset (offset proportional to intensity)")
       << "\n\n| run |";
    for (const int n : cfg.mirror_counts) md << " " << n << " mirrors |";
    md << "\n|---|";
    for (std::size_t i = 0; i < cfg.mirror_counts.size(); ++i) md << "---|";
    md << "\n";
    for (const auto seed : cfg.seeds) {
      md << "| seed " << seed << " |";
      for (const int n : cfg.mirror_counts) {
        const CellResult* c = report.find(CellSpec{LabelTask::intensity, n, mode, seed}.id(), seed);
        md << " " << cell_text(c, &CellResult::patch_accuracy) << " |";
      }
      md << "\n";
    }
    md << "| mean ± std |";
    for (const int n : cfg.mirror_counts) {
      md << " " << stat_text(find_stat(report, CellSpec{LabelTask::intensity, n, mode, 0}.id(), "patch_accuracy"))
         << " |";
    }
    md << "\n| " << ref_label << " |";
    for (const int n : cfg.mirror_counts) {
      const auto v = PublishedReference::intensity(n, mode);
      md << " " << (v ? fixed4(*v) : "n/a") << " |";
    }
    md << "\n\n";
  }

  md << "## Classical threshold baseline\n\n";
  md << "Single-threshold detectors on the binary dataset's test patches. The threshold is the best "
        "one found on the test split itself, so these figures are an upper bound for the baseline.\n\n";
  md << "| run | metric | threshold | direction | accuracy | classifier |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const auto seed : cfg.seeds) {
    const CellResult* c = report.find(binary_id, seed);
    if (c == nullptr || !c->error.empty()) {
      md << "| seed " << seed << " | " << cell_text(c, &CellResult::patch_accuracy) << " | | | | |\n";
      continue;
    }
    for (const auto& b : c->baselines) {
      char thr[32];
      std::snprintf(thr, sizeof thr, "%.6g", b.threshold);
      md << "| seed " << seed << " | " << b.metric << " | " << thr << " | " << b.direction << " | "
         << fixed4(b.accuracy) << " | " << cell_text(c, &CellResult::patch_accuracy) << " |\n";
    }
  }

  md << "\n## Provenance\n\n";
  md << "| cell | seed | manifest | model | model seed | classes | train/val/test patches | best epoch |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& c : report.cells) {
    md << "| " << c.spec.id() << " | " << c.spec.seed << " | " << c.directory << "/manifest.csv | " << c.directory
       << "/model.json | " << c.model_seed << " | " << c.n_classes << " | " << c.train_patches << "/"
       << c.val_patches << "/" << c.test_patches << " | " << c.best_epoch << " |\n";
  }
  return md.str();
}

RunReport run_report(const ReportConfig& config, const fs::path& out_dir) {
  if (config.seeds.empty()) throw ArgumentError("at least one seed is required");
  if (config.mirror_counts.empty()) throw ArgumentError("at least one mirror count is required");
  RunReport report;
  report.config = config;
  report.experiment_id = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "report-%016llx",
                  static_cast<unsigned long long>(fnv1a(config_json(config).dump())));
    return std::string(buf);
  }();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const auto start = std::chrono::steady_clock::now();
  for (const auto& cell : report_cells(config)) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (config.time_budget_seconds > 0.0 && elapsed >= config.time_budget_seconds) {
      CellResult skipped;
      skipped.spec = cell;
      skipped.directory = "seed_" + std::to_string(cell.seed) + "/" + cell.id();
      skipped.model_seed = model_seed_for(cell.seed);
      skipped.error = "skipped: time budget exhausted";
      report.cells.push_back(std::move(skipped));
      continue;
    }
    report.cells.push_back(run_cell(cell, config.pipeline, out_dir));
  }
  report.summary = build_summary(report.cells);

  write_text_file(out_dir / "report.md", format_report_markdown(report));
  write_text_file(out_dir / "report.json", format_report_json(report));
  for (const auto seed : config.seeds) {
    write_text_file(out_dir / ("seed_" + std::to_string(seed)) / "results.json", format_seed_json(report, seed));
  }
  write_text_file(out_dir / "timings.json", format_timings_json(report));
  return report;
}

}  // namespace ghostdet::tools
