#include "ghostdet/tools/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ghostdet/classifier.hpp"
#include "ghostdet/dataset.hpp"
#include "ghostdet/detector.hpp"
#include "ghostdet/error.hpp"
#include "ghostdet/pnm.hpp"
#include "ghostdet/spectral.hpp"
#include "ghostdet/tools/experiment.hpp"
#include "text_file.hpp"

namespace ghostdet::tools {

namespace fs = std::filesystem;

namespace {

std::optional<Split> split_filter(const std::string& text) {
  if (text == "all") return std::nullopt;
  return parse_split(text);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> feature_names() {
  std::vector<std::string> names;
  char buf[32];
  for (std::size_t i = 0; i < kRadialBins; ++i) {
    std::snprintf(buf, sizeof buf, "radial_mean_%02zu", i);
    names.emplace_back(buf);
  }
  for (std::size_t i = 0; i < kRadialBins; ++i) {
    std::snprintf(buf, sizeof buf, "radial_std_%02zu", i);
    names.emplace_back(buf);
  }
  names.emplace_back("laplacian_variance");
  names.emplace_back("pixel_mean");
  names.emplace_back("pixel_std");
  return names;
}

void append_feature_row(std::string& csv, const std::string& path, std::size_t row, std::size_t col,
                        const FeatureVector& f) {
  csv += path + "," + std::to_string(row) + "," + std::to_string(col);
  for (double v : f.values) csv += "," + num(v);
  csv += "\n";
}

void export_spectra(const GrayImage& img, std::size_t patch_size, const fs::path& dir, const std::string& stem) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const PatchSet set = extract_patches(img, patch_size);
  for (std::size_t i = 0; i < set.patches.size(); ++i) {
    const std::size_t r = i / set.grid.cols;
    const std::size_t c = i % set.grid.cols;
    const GrayImage spec = spectrum_image(magnitude_spectrum(set.patches[i]));
    pnm::write_pgm(dir / (stem + "_r" + std::to_string(r) + "_c" + std::to_string(c) + ".pgm"), spec);
  }
}

LabeledSet labeled_split(const DatasetManifest& manifest, const std::vector<PatchSample>& samples,
                         Split split, std::size_t n_classes) {
  LabeledSet set;
  for (const auto& s : samples) {
    const ManifestRecord& rec = manifest.records[s.record];
    if (rec.split == split) set.add(s.features, label_for(rec, n_classes));
  }
  return set;
}

nlohmann::ordered_json metrics_json(const Metrics& m, const std::string& split) {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["total"] = m.total;
  j["accuracy"] = m.accuracy;
  j["mean_cross_entropy"] = m.mean_cross_entropy;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["confusion"] = m.confusion;
  return j;
}

struct SynthArgs {
  std::string out;
  std::size_t n_images = 100;
  std::size_t image_size = 532;
  int mirrors = 4;
  std::string mode = "proportional";
  std::string corruption = "ghost";
  std::string task = "intensity";
  std::string translation = "circular";
  std::vector<double> sigmas = {1, 2, 3, 4, 5};
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;
  double alpha = kDefaultSpectralExponent;
  double alpha_spread = kDefaultExponentSpread;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;
  std::size_t jobs = 0;
};

struct FeaturesArgs {
  std::string manifest;
  std::string image;
  std::string out;
  std::string spectra_dir;
  std::string split = "all";
  std::size_t patch_size = kDefaultPatchSize;
  std::size_t jobs = 0;
};

struct TrainArgs {
  std::string manifest;
  std::string model_out;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  std::size_t patch_size = kDefaultPatchSize;
  TrainConfig config;
  std::size_t jobs = 0;
};

struct EvalArgs {
  std::string model;
  std::string manifest;
  std::string split = "test";
  std::string metrics_out = "metrics.json";
  std::size_t patch_size = kDefaultPatchSize;
  std::size_t jobs = 0;
};

struct DetectArgs {
  std::string model;
  std::string image;
  std::string manifest;
  std::string split = "all";
  std::string out = "verdicts.csv";
  std::string summary_out = "detection.json";
  double tau = kDefaultTau;
  std::size_t patch_size = kDefaultPatchSize;
  std::size_t jobs = 0;
};

struct ReportArgs {
  std::string out;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<int> mirrors = {4, 6, 8};
  int binary_mirrors = 4;
  double time_budget = 0.0;
  PipelineConfig pipeline;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  DatasetSpec spec;
  spec.n_images = a.n_images;
  spec.image_size = a.image_size;
  spec.mirror.n_segments = a.mirrors;
  spec.offset_mode = parse_offset_mode(a.mode);
  spec.corruption = parse_corruption(a.corruption);
  spec.task = parse_task(a.task);
  spec.translation = a.translation == "zero_fill" ? TranslationMode::zero_fill : TranslationMode::circular;
  spec.blur_sigmas = a.sigmas;
  spec.train_fraction = a.train;
  spec.val_fraction = a.val;
  spec.test_fraction = a.test;
  spec.spectral_exponent = a.alpha;
  spec.spectral_exponent_spread = a.alpha_spread;
  spec.seed = a.seed;
  for (const auto& s : a.sources) spec.source_images.emplace_back(s);
  spec.jobs = a.jobs;
  const DatasetManifest manifest = generate_dataset(spec, a.out);
  out << "wrote " << manifest.records.size() << " images (" << class_count(spec) << " classes) to "
      << (fs::path(a.out) / "manifest.csv").string() << "\n";
  return kExitOk;
}

int cmd_features(const FeaturesArgs& a, std::ostream& out) {
  std::string csv = "image_path,patch_row,patch_col";
  for (const auto& name : feature_names()) csv += "," + name;
  csv += "\n";
  std::size_t rows = 0;
  if (!a.image.empty()) {
    const GrayImage img = pnm::read_gray(a.image);
    for (const auto& s : featurize_image(img, a.patch_size, a.jobs)) {
      append_feature_row(csv, a.image, s.patch_row, s.patch_col, s.features);
      ++rows;
    }
    if (!a.spectra_dir.empty()) export_spectra(img, a.patch_size, a.spectra_dir, fs::path(a.image).stem().string());
  } else {
    const DatasetManifest manifest = read_manifest(a.manifest);
    const auto filter = split_filter(a.split);
    for (const auto& s : featurize_manifest(manifest, a.patch_size, filter, a.jobs)) {
      append_feature_row(csv, manifest.records[s.record].path, s.patch_row, s.patch_col, s.features);
      ++rows;
    }
    if (!a.spectra_dir.empty()) {
      for (const auto& rec : manifest.records) {
        if (filter && rec.split != *filter) continue;
        export_spectra(pnm::read_gray(manifest.image_path(rec)), a.patch_size, a.spectra_dir,
                       fs::path(rec.path).stem().string());
      }
    }
  }
  write_text_file(a.out, csv);
  out << "wrote " << rows << " feature rows to " << a.out << "\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const DatasetManifest manifest = read_manifest(a.manifest);
  const auto samples = featurize_manifest(manifest, a.patch_size, std::nullopt, a.jobs);
  const LabeledSet train_set = labeled_split(manifest, samples, Split::train, a.classes);
  const LabeledSet val_set = labeled_split(manifest, samples, Split::val, a.classes);
  TrainConfig config = a.config;
  config.seed = a.seed;
  const TrainResult result = fit(train_set, val_set, a.classes, config);
  save_model(result.model, a.model_out);
  const std::size_t best = result.best_epoch;
  out << "trained on " << train_set.size() << " patches (" << val_set.size() << " validation); best epoch "
      << best;
  if (best > 0 && best <= result.val_loss.size()) out << ", validation loss " << fixed4(result.val_loss[best - 1]);
  out << "; model written to " << a.model_out << "\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  const DatasetManifest manifest = read_manifest(a.manifest);
  const Split split = parse_split(a.split);
  const auto samples = featurize_manifest(manifest, a.patch_size, split, a.jobs);
  const LabeledSet set = labeled_split(manifest, samples, split, model.n_classes);
  if (set.size() == 0) throw ArgumentError("split '" + a.split + "' has no patches");
  const Metrics m = evaluate(model, set);
  write_text_file(a.metrics_out, metrics_json(m, a.split).dump(2) + "\n");
  out << "accuracy " << fixed4(m.accuracy) << " on " << m.total << " " << a.split << " patches; metrics written to "
      << a.metrics_out << "\n";
  return kExitOk;
}

int cmd_detect(const DetectArgs& a, std::ostream& out) {
  const Model model = load_model(a.model);
  if (!a.image.empty()) {
    const GrayImage img = pnm::read_gray(a.image);
    const ImageVerdict v = classify_image(model, img, a.patch_size, a.tau, a.jobs);
    const auto ghosted = static_cast<std::size_t>(std::lround(v.ghosted_patch_fraction * static_cast<double>(v.n_patches)));
    out << a.image << ": " << (v.is_misaligned ? "misaligned" : "aligned") << ", ghosted fraction "
        << fixed4(v.ghosted_patch_fraction) << " (" << ghosted << "/" << v.n_patches << " patches)";
    if (v.estimated_k) out << ", estimated k " << *v.estimated_k;
    out << "\n" << format_verdict_json(v) << "\n";
    return kExitOk;
  }
  const DatasetManifest manifest = read_manifest(a.manifest);
  const BatchDetection det = batch_detect(model, manifest, a.tau, a.patch_size, split_filter(a.split), a.jobs);
  write_text_file(a.out, format_verdict_csv(det));
  write_text_file(a.summary_out, format_detection_summary(det));
  out << "image accuracy " << fixed4(det.image_accuracy) << ", k accuracy " << fixed4(det.k_accuracy) << " over "
      << det.n_images << " images (" << det.failures << " failures); verdicts written to " << a.out << "\n";
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  ReportConfig config;
  config.pipeline = a.pipeline;
  config.seeds = a.seeds;
  config.mirror_counts = a.mirrors;
  config.binary_segments = a.binary_mirrors;
  config.time_budget_seconds = a.time_budget;
  const RunReport report = run_report(config, a.out);
  std::size_t failed = 0;
  for (const auto& c : report.cells) {
    out << c.spec.id() << " seed " << c.spec.seed << ": ";
    if (!c.error.empty()) {
      out << c.error << "\n";
      ++failed;
    } else {
      out << "accuracy " << (c.patch_accuracy ? fixed4(*c.patch_accuracy) : "n/a") << "\n";
    }
  }
  out << "report written to " << (fs::path(a.out) / "report.md").string();
  if (failed > 0) out << " (" << failed << " cells failed)";
  out << "\n";
  return kExitOk;
}

void add_jobs(CLI::App* sub, std::size_t& jobs) {
  sub->add_option("--jobs", jobs, "Worker threads (0 = all hardware threads); results do not depend on it");
}

void add_config(CLI::App* sub, std::string& config_sink) {
  sub->add_option("--config", config_sink,
                  "key = value file supplying option values; flags on the command line win");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Replaces "--config FILE" with the file's settings, skipping any key that is
// also given on the command line. Keys may sit at top level or under a
// [subcommand] section; underscores and dashes are interchangeable.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  std::size_t sub_pos = 0;
  std::string sub_name;
  for (std::size_t i = 1; i < args.size() && sub_name.empty(); ++i) {
    for (const CLI::App* sub : app.get_subcommands({})) {
      if (sub->get_name() == args[i]) {
        sub_pos = i;
        sub_name = args[i];
        break;
      }
    }
  }
  if (sub_name.empty()) return args;

  std::string path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;
  if (!fs::is_regular_file(path)) throw IoError("cannot open config file " + path);

  std::vector<std::string> injected;
  for (const CLI::ConfigItem& item : CLI::ConfigTOML().from_file(path)) {
    if (item.name.empty() || item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub_name)) continue;
    std::string flag = "--" + item.name;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    if (has_flag(args, flag)) continue;
    injected.push_back(flag);
    injected.insert(injected.end(), item.inputs.begin(), item.inputs.end());
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, injected.begin(), injected.end());
  return args;
}

void print_usage(const CLI::App& app, std::ostream& err) {
  for (const CLI::App* sub : app.get_subcommands()) {
    err << sub->help();
    return;
  }
  err << app.help();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ghost-artifact synthesis, spectral features and misalignment detection", "ghostdet"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<int()> action;
  std::string config_path;  // consumed by expand_config before parsing

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Synthesize a labeled ghost or blur dataset and its manifest");
  add_config(s, config_path);
  s->add_option("--out", synth.out, "Output directory (manifest.csv and images/)")->required();
  s->add_option("--n-images", synth.n_images, "Number of images")->check(CLI::PositiveNumber);
  s->add_option("--image-size", synth.image_size, "Side of the square ground images in pixels");
  s->add_option("--mirrors", synth.mirrors, "Mirror segment count N")->check(CLI::Range(2, 64));
  s->add_option("--mode", synth.mode, "Ghost offset mode")->check(CLI::IsMember({"random", "proportional"}));
  s->add_option("--corruption", synth.corruption, "Corruption applied to the non-clean classes")
      ->check(CLI::IsMember({"ghost", "blur", "none"}));
  s->add_option("--task", synth.task, "Label task for ghost datasets")->check(CLI::IsMember({"intensity", "binary"}));
  s->add_option("--translation", synth.translation, "Border handling of the ghost translation")
      ->check(CLI::IsMember({"circular", "zero_fill"}));
  s->add_option("--sigmas", synth.sigmas, "Gaussian blur sigmas for the blur corpus")->delimiter(',');
  s->add_option("--train", synth.train, "Training split fraction");
  s->add_option("--val", synth.val, "Validation split fraction");
  s->add_option("--test", synth.test, "Test split fraction");
  s->add_option("--alpha", synth.alpha, "Spectral exponent of the procedural 1/f^alpha ground images");
  s->add_option("--alpha-spread", synth.alpha_spread, "Per-image exponent drawn uniformly from alpha +/- this");
  s->add_option("--seed", synth.seed, "Master seed");
  s->add_option("--source", synth.sources, "Ground images (PGM/PPM) to use instead of procedural fields")
      ->check(CLI::ExistingFile);
  add_jobs(s, synth.jobs);
  s->callback([&] { action = [&] { return cmd_synth(synth, out); }; });

  FeaturesArgs feat;
  auto* f = app.add_subcommand("features", "Write per-patch feature vectors as CSV");
  add_config(f, config_path);
  auto* f_manifest = f->add_option("--manifest", feat.manifest, "Dataset manifest to featurize");
  auto* f_image = f->add_option("--image", feat.image, "Single PGM/PPM image to featurize");
  f_manifest->excludes(f_image);
  f->add_option("--out", feat.out, "Output CSV path")->required();
  f->add_option("--split", feat.split, "Manifest split to featurize")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  f->add_option("--spectra-dir", feat.spectra_dir, "Also export each patch's magnitude spectrum as PGM here");
  f->add_option("--patch-size", feat.patch_size, "Patch side in pixels");
  add_jobs(f, feat.jobs);
  f->callback([&] {
    if (feat.manifest.empty() && feat.image.empty()) throw CLI::RequiredError("--manifest or --image");
    action = [&] { return cmd_features(feat, out); };
  });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the patch classifier on a manifest's train/val splits");
  add_config(t, config_path);
  t->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  t->add_option("--seed", tr.seed, "Training seed")->required();
  t->add_option("--model-out", tr.model_out, "Output model JSON path")->required();
  t->add_option("--classes", tr.classes, "Class count: 2 for binary detection, N for intensity classes")
      ->check(CLI::Range(2, 64));
  t->add_option("--hidden", tr.config.hidden_dim, "Hidden units (0 = softmax regression)");
  t->add_option("--lr", tr.config.learning_rate, "Learning rate");
  t->add_option("--momentum", tr.config.momentum, "SGD momentum");
  t->add_option("--batch-size", tr.config.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  t->add_option("--epochs", tr.config.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  t->add_option("--l2", tr.config.l2, "L2 penalty on weights");
  t->add_option("--patience", tr.config.early_stop_patience, "Early-stopping patience in epochs");
  t->add_option("--patch-size", tr.patch_size, "Patch side in pixels");
  add_jobs(t, tr.jobs);
  t->callback([&] { action = [&] { return cmd_train(tr, out); }; });

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model on one manifest split");
  add_config(e, config_path);
  e->add_option("--model", ev.model, "Model JSON")->required();
  e->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
  e->add_option("--split", ev.split, "Split to evaluate")->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--metrics-out", ev.metrics_out, "Output metrics JSON path");
  e->add_option("--patch-size", ev.patch_size, "Patch side in pixels");
  add_jobs(e, ev.jobs);
  e->callback([&] { action = [&] { return cmd_eval(ev, out); }; });

  DetectArgs de;
  auto* d = app.add_subcommand("detect", "Image-level misalignment verdicts from patch votes");
  add_config(d, config_path);
  d->add_option("--model", de.model, "Model JSON")->required();
  auto* d_image = d->add_option("--image", de.image, "Single PGM/PPM image");
  auto* d_manifest = d->add_option("--manifest", de.manifest, "Dataset manifest for batch detection");
  d_image->excludes(d_manifest);
  d->add_option("--tau", de.tau, "Ghosted-patch fraction at or above which an image is misaligned")
      ->check(CLI::Range(0.0, 1.0));
  d->add_option("--split", de.split, "Manifest split to detect on")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  d->add_option("--out", de.out, "Verdict CSV path (manifest mode)");
  d->add_option("--summary-out", de.summary_out, "Summary JSON path (manifest mode)");
  d->add_option("--patch-size", de.patch_size, "Patch side in pixels");
  add_jobs(d, de.jobs);
  d->callback([&] {
    if (de.image.empty() && de.manifest.empty()) throw CLI::RequiredError("--image or --manifest");
    if (!(de.tau > 0.0)) throw CLI::ValidationError("--tau", "must be in (0, 1]");
    action = [&] { return cmd_detect(de, out); };
  });

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Run the full experiment matrix and write Markdown and JSON reports");
  add_config(r, config_path);
  r->add_option("--out", rep.out, "Output directory")->required();
  r->add_option("--seeds", rep.seeds, "Seeds to run")->delimiter(',');
  r->add_option("--mirrors", rep.mirrors, "Mirror counts for the intensity tables")->delimiter(',');
  r->add_option("--binary-mirrors", rep.binary_mirrors, "Mirror count of the binary dataset");
  r->add_option("--n-images", rep.pipeline.n_images, "Images per dataset")->check(CLI::PositiveNumber);
  r->add_option("--image-size", rep.pipeline.image_size, "Ground image side in pixels");
  r->add_option("--patch-size", rep.pipeline.patch_size, "Patch side in pixels");
  r->add_option("--alpha", rep.pipeline.spectral_exponent, "Spectral exponent of the ground images");
  r->add_option("--alpha-spread", rep.pipeline.spectral_exponent_spread, "Per-image exponent spread around --alpha");
  r->add_option("--tau", rep.pipeline.tau, "Image verdict threshold")->check(CLI::Range(0.0, 1.0));
  r->add_option("--hidden", rep.pipeline.train.hidden_dim, "Hidden units");
  r->add_option("--epochs", rep.pipeline.train.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  r->add_option("--time-budget", rep.time_budget, "Seconds after which remaining cells are skipped (0 = none)");
  add_jobs(r, rep.pipeline.jobs);
  r->callback([&] { action = [&] { return cmd_report(rep, out); }; });

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args, app);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& e) {
    err << "error: config file: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<const char*> argv;
  for (const auto& a : expanded) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    print_usage(app, err);
    return kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace ghostdet::tools
