#include "ghostdet/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ghostdet/error.hpp"
#include "ghostdet/parallel.hpp"
#include "ghostdet/pnm.hpp"

namespace ghostdet {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("tau must lie in (0, 1]");
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ImageVerdict aggregate_votes(std::vector<PatchVerdict> votes, double tau) {
  check_tau(tau);
  if (votes.empty()) throw ArgumentError("cannot aggregate zero patch votes");
  std::sort(votes.begin(), votes.end(), [](const PatchVerdict& a, const PatchVerdict& b) {
    return std::tie(a.patch_row, a.patch_col) < std::tie(b.patch_row, b.patch_col);
  });

  std::vector<int> nonzero;
  for (const auto& v : votes) {
    if (v.predicted_class > 0) nonzero.push_back(v.predicted_class);
  }
  ImageVerdict verdict;
  verdict.n_patches = votes.size();
  verdict.ghosted_patch_fraction =
      static_cast<double>(nonzero.size()) / static_cast<double>(votes.size());
  verdict.is_misaligned = verdict.ghosted_patch_fraction >= tau;
  if (verdict.is_misaligned) {
    std::sort(nonzero.begin(), nonzero.end());
    verdict.estimated_k = nonzero[(nonzero.size() - 1) / 2];
  }
  verdict.per_patch = std::move(votes);
  return verdict;
}

ImageVerdict classify_image(const Model& model, const GrayImage& img, std::size_t patch_size,
                            double tau, std::size_t jobs) {
  check_tau(tau);
  const auto samples = featurize_image(img, patch_size, jobs);
  std::vector<PatchVerdict> votes(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const auto probs = predict(model, samples[i].features);
    const int cls = argmax(probs);
    votes[i] = PatchVerdict{samples[i].patch_row, samples[i].patch_col, cls,
                            probs[static_cast<std::size_t>(cls)]};
  });
  return aggregate_votes(std::move(votes), tau);
}

BatchDetection batch_detect(const Model& model, const DatasetManifest& manifest, double tau,
                            std::size_t patch_size, std::optional<Split> split, std::size_t jobs) {
  check_tau(tau);
  std::vector<const ManifestRecord*> chosen;
  for (const auto& r : manifest.records) {
    if (!split || r.split == *split) chosen.push_back(&r);
  }
  if (chosen.empty()) throw ArgumentError("no manifest images to classify");

  BatchDetection out;
  out.rows.resize(chosen.size());
  parallel_for(chosen.size(), jobs, [&](std::size_t i) {
    const auto& rec = *chosen[i];
    DetectionRow row;
    row.path = rec.path;
    row.true_k = rec.k;
    row.truly_corrupted = label_for(rec, 2) != 0;
    try {
      const auto verdict = classify_image(model, pnm::read_gray(manifest.image_path(rec)),
                                          patch_size, tau, 1);
      row.n_patches = verdict.n_patches;
      row.ghosted_fraction = verdict.ghosted_patch_fraction;
      row.is_misaligned = verdict.is_misaligned;
      row.estimated_k = verdict.estimated_k;
    } catch (const CompatibilityError&) {
      throw;
    } catch (const Error& e) {
      row.error = e.what();
    }
    out.rows[i] = std::move(row);
  });

  out.n_images = out.rows.size();
  std::size_t correct = 0;
  std::size_t k_correct = 0;
  std::vector<int> labels;
  std::vector<std::vector<double>> onehot;
  for (const auto& row : out.rows) {
    if (!row.error.empty()) {
      ++out.failures;
      continue;
    }
    if (row.is_misaligned == row.truly_corrupted) ++correct;
    if (row.estimated_k.value_or(0) == row.true_k) ++k_correct;
    labels.push_back(row.truly_corrupted ? 1 : 0);
    onehot.push_back(row.is_misaligned ? std::vector<double>{0.0, 1.0}
                                       : std::vector<double>{1.0, 0.0});
  }
  const std::size_t processed = out.n_images - out.failures;
  if (processed > 0) {
    out.image_accuracy = static_cast<double>(correct) / static_cast<double>(processed);
    out.k_accuracy = static_cast<double>(k_correct) / static_cast<double>(processed);
    out.image_metrics = metrics_from_predictions(2, labels, onehot);
  }
  return out;
}

std::string format_verdict_csv(const BatchDetection& detection) {
  std::ostringstream out;
  out << "path,n_patches,ghosted_fraction,is_misaligned,estimated_k,true_k\n";
  for (const auto& row : detection.rows) {
    out << row.path << ',';
    if (!row.error.empty()) {
      out << ",,,," << row.true_k << '\n';
      continue;
    }
    out << row.n_patches << ',' << format_real(row.ghosted_fraction) << ','
        << (row.is_misaligned ? "true" : "false") << ',';
    if (row.estimated_k) out << *row.estimated_k;
    out << ',' << row.true_k << '\n';
  }
  return out.str();
}

std::string format_detection_summary(const BatchDetection& detection) {
  nlohmann::json j;
  j["n_images"] = detection.n_images;
  j["image_accuracy"] = detection.image_accuracy;
  j["k_accuracy"] = detection.k_accuracy;
  j["failures"] = detection.failures;
  auto errors = nlohmann::json::array();
  for (const auto& row : detection.rows) {
    if (!row.error.empty()) errors.push_back({{"path", row.path}, {"error", row.error}});
  }
  j["errors"] = std::move(errors);
  return j.dump(2) + "\n";
}

std::string format_verdict_json(const ImageVerdict& verdict) {
  nlohmann::json j;
  j["n_patches"] = verdict.n_patches;
  j["ghosted_patch_fraction"] = verdict.ghosted_patch_fraction;
  j["is_misaligned"] = verdict.is_misaligned;
  j["estimated_k"] = verdict.estimated_k ? nlohmann::json(*verdict.estimated_k) : nlohmann::json();
  auto patches = nlohmann::json::array();
  for (const auto& p : verdict.per_patch) {
    patches.push_back({{"patch_row", p.patch_row},
                       {"patch_col", p.patch_col},
                       {"predicted_class", p.predicted_class},
                       {"max_probability", p.max_probability}});
  }
  j["per_patch"] = std::move(patches);
  return j.dump(2) + "\n";
}

}  // namespace ghostdet
