#include <doctest.h>

#include <algorithm>

#include "ghostdet/detector.hpp"
#include "ghostdet/error.hpp"
#include "ghostdet/pnm.hpp"
#include "temp_dir.hpp"

using namespace ghostdet;

namespace {

// Model that predicts `cls` for every input of the given patch size.
Model constant_model(std::size_t n_classes, int cls, std::size_t patch_size) {
  Model m = init_model(kFeatureLength, 0, n_classes, 1, feature_fingerprint(patch_size));
  std::fill(m.layers[0].weights.begin(), m.layers[0].weights.end(), 0.0);
  std::fill(m.layers[0].bias.begin(), m.layers[0].bias.end(), 0.0);
  m.layers[0].bias[static_cast<std::size_t>(cls)] = 5.0;
  return m;
}

std::vector<PatchVerdict> votes_with(std::size_t n, std::size_t m, int cls) {
  std::vector<PatchVerdict> votes;
  for (std::size_t i = 0; i < n; ++i) {
    votes.push_back(PatchVerdict{i / 9, i % 9, i < m ? cls : 0, 0.9});
  }
  return votes;
}

}  // namespace

TEST_CASE("classify_image with constant models") {
  const auto img = synth_ground_image(64, 1.5, 3);
  const auto aligned = classify_image(constant_model(4, 0, 32), img, 32);
  CHECK(aligned.n_patches == 4);
  CHECK(aligned.ghosted_patch_fraction == 0.0);
  CHECK_FALSE(aligned.is_misaligned);
  CHECK_FALSE(aligned.estimated_k.has_value());

  const auto ghosted = classify_image(constant_model(4, 3, 32), img, 32);
  CHECK(ghosted.ghosted_patch_fraction == 1.0);
  CHECK(ghosted.is_misaligned);
  CHECK(ghosted.estimated_k == 3);
  for (const auto& p : ghosted.per_patch) {
    CHECK(p.predicted_class == 3);
    CHECK(p.max_probability > 0.9);
  }

  CHECK(classify_image(constant_model(4, 3, 32), img, 32, 0.5, 3) == ghosted);
  CHECK_THROWS_AS(classify_image(constant_model(4, 0, 32), img, 128), ArgumentError);
  CHECK_THROWS_AS(classify_image(constant_model(4, 0, 32), img, 16), CompatibilityError);
  CHECK_THROWS_AS(classify_image(constant_model(4, 0, 32), img, 32, 0.0), ArgumentError);
  CHECK_THROWS_AS(classify_image(constant_model(4, 0, 32), img, 32, 1.5), ArgumentError);
}

TEST_CASE("aggregate_votes counting and threshold") {
  const auto v = aggregate_votes(votes_with(81, 40, 2), 0.5);
  CHECK(v.ghosted_patch_fraction == 40.0 / 81.0);
  CHECK_FALSE(v.is_misaligned);
  CHECK_FALSE(v.estimated_k.has_value());

  // A fraction exactly at tau counts as misaligned.
  const auto boundary = aggregate_votes(votes_with(4, 2, 1), 0.5);
  CHECK(boundary.ghosted_patch_fraction == 0.5);
  CHECK(boundary.is_misaligned);

  CHECK_THROWS_AS(aggregate_votes({}, 0.5), ArgumentError);
}

TEST_CASE("estimated_k is the lower median of nonzero votes") {
  std::vector<PatchVerdict> votes{{0, 0, 1, 1}, {0, 1, 3, 1}, {0, 2, 0, 1}};
  CHECK(aggregate_votes(votes, 0.5).estimated_k == 1);
  votes.push_back({0, 3, 2, 1});
  CHECK(aggregate_votes(votes, 0.5).estimated_k == 2);
}

TEST_CASE("ghosted fraction is m / n and independent of vote order") {
  Rng rng(5);
  for (std::size_t n = 1; n <= 81; n += 4) {
    double previous = -1.0;
    for (std::size_t m = 0; m <= n; ++m) {
      auto votes = votes_with(n, m, 1 + static_cast<int>(m % 3));
      const auto v = aggregate_votes(votes, 0.5);
      CHECK(v.ghosted_patch_fraction == static_cast<double>(m) / static_cast<double>(n));
      CHECK(v.ghosted_patch_fraction >= previous);
      previous = v.ghosted_patch_fraction;
      for (std::size_t i = votes.size(); i > 1; --i) {
        std::swap(votes[i - 1], votes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      }
      CHECK(aggregate_votes(votes, 0.5) == v);
    }
  }
}

TEST_CASE("batch_detect") {
  TempDir dir("detect");
  DatasetSpec spec;
  spec.n_images = 6;
  spec.image_size = 64;
  spec.corruption = Corruption::none;
  spec.seed = 2;
  auto manifest = generate_dataset(spec, dir.path());

  const auto all_zero = batch_detect(constant_model(2, 0, 32), manifest, 0.5, 32);
  CHECK(all_zero.n_images == 6);
  CHECK(all_zero.failures == 0);
  CHECK(all_zero.image_accuracy == 1.0);
  CHECK(all_zero.k_accuracy == 1.0);
  REQUIRE(all_zero.image_metrics.has_value());
  CHECK(all_zero.image_metrics->accuracy == 1.0);

  const auto csv = format_verdict_csv(all_zero);
  CHECK(csv.starts_with("path,n_patches,ghosted_fraction,is_misaligned,estimated_k,true_k\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

  manifest.records[1].path = "images/does_not_exist.pgm";
  const auto with_failure = batch_detect(constant_model(2, 0, 32), manifest, 0.5, 32);
  CHECK(with_failure.failures == 1);
  CHECK(with_failure.rows[1].error.size() > 0);
  CHECK(with_failure.image_accuracy == 1.0);
  CHECK(format_detection_summary(with_failure).find("\"failures\": 1") != std::string::npos);

  DatasetManifest empty{dir.path(), "", {}};
  CHECK_THROWS_AS(batch_detect(constant_model(2, 0, 32), empty, 0.5, 32), ArgumentError);
}
