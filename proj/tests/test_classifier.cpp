#include <doctest.h>

#include <cmath>

#include "blobs.hpp"
#include "gradient_check.hpp"
#include "ghostdet/classifier.hpp"
#include "ghostdet/error.hpp"
#include "temp_dir.hpp"

using namespace ghostdet;

namespace {

TrainConfig quick_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.epochs = 50;
  return c;
}

}  // namespace

TEST_CASE("analytic gradients match central differences") {
  for (std::size_t hidden : {0u, 64u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CHECK_MESSAGE(oracle::gradient_check(hidden, seed, 150) < 1e-4, "hidden ", hidden, " seed ", seed);
    }
  }
}

TEST_CASE("train separates well-separated blobs") {
  const auto train_set = oracle::blobs(200, 10.0, 1);
  const auto val_set = oracle::blobs(40, 10.0, 2);
  for (std::size_t hidden : {0u, 64u}) {
    auto cfg = quick_config(3);
    cfg.hidden_dim = hidden;
    const auto model = train(train_set, val_set, 2, cfg);
    CHECK(evaluate(model, train_set).accuracy == 1.0);
  }
}

TEST_CASE("training is deterministic in the seed") {
  const auto train_set = oracle::blobs(120, 3.0, 4);
  const auto val_set = oracle::blobs(30, 3.0, 5);
  const auto a = train(train_set, val_set, 2, quick_config(9));
  const auto b = train(train_set, val_set, 2, quick_config(9));
  CHECK(a == b);
  CHECK(model_to_json(a) == model_to_json(b));
  CHECK_FALSE(a == train(train_set, val_set, 2, quick_config(10)));
}

TEST_CASE("training preconditions") {
  auto one_class = oracle::blobs(20, 3.0, 1);
  for (auto& l : one_class.labels) l = 0;
  CHECK_THROWS_AS(train(one_class, {}, 2, quick_config(1)), DataError);

  auto bad_label = oracle::blobs(20, 3.0, 1);
  bad_label.labels[3] = 7;
  CHECK_THROWS_AS(train(bad_label, {}, 2, quick_config(1)), DataError);

  auto cfg = quick_config(1);
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(train(oracle::blobs(20, 3.0, 1), {}, 2, cfg), ArgumentError);
}

TEST_CASE("runaway learning rate is reported as divergence") {
  auto set = oracle::blobs(40, 3.0, 1);
  for (auto& f : set.features) f.values[5] *= 1e150;
  auto cfg = quick_config(1);
  cfg.learning_rate = 1e300;
  cfg.momentum = 0.0;
  cfg.hidden_dim = 0;
  try {
    train(set, {}, 2, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 1);
  }
}

TEST_CASE("full-batch loss is non-increasing at a small step size without momentum") {
  const auto set = oracle::blobs(200, 4.0, 6);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.momentum = 0.0;
  cfg.learning_rate = 0.05;
  cfg.batch_size = set.size();
  cfg.epochs = 60;
  cfg.early_stop_patience = 1000;
  for (std::size_t hidden : {0u, 64u}) {
    cfg.hidden_dim = hidden;
    const auto result = fit(set, {}, 2, cfg);
    REQUIRE(result.train_loss.size() == 60);
    for (std::size_t e = 1; e < result.train_loss.size(); ++e) {
      CHECK(result.train_loss[e] <= result.train_loss[e - 1]);
    }
  }
}

TEST_CASE("standardization is fitted on the training split") {
  const auto set = oracle::blobs(150, 2.0, 7);
  auto cfg = quick_config(1);
  cfg.epochs = 1;
  const auto model = train(set, {}, 2, cfg);
  std::vector<double> mean(kFeatureLength, 0.0), sq(kFeatureLength, 0.0);
  for (const auto& f : set.features) {
    const auto x = standardize(model, f);
    for (std::size_t d = 0; d < x.size(); ++d) mean[d] += x[d] / 150.0;
  }
  for (const auto& f : set.features) {
    const auto x = standardize(model, f);
    for (std::size_t d = 0; d < x.size(); ++d) sq[d] += (x[d] - mean[d]) * (x[d] - mean[d]) / 150.0;
  }
  for (std::size_t d = 0; d < kFeatureLength; ++d) {
    CHECK(std::abs(mean[d]) < 1e-9);
    CHECK(std::abs(std::sqrt(sq[d]) - 1.0) < 1e-6);
  }

  auto degenerate = oracle::blobs(30, 2.0, 8);
  for (auto& f : degenerate.features) f.values[10] = 4.2;
  const auto m2 = train(degenerate, {}, 2, cfg);
  CHECK(m2.normalization.stds[10] == 1.0);
}

TEST_CASE("predict") {
  FeatureVector f;
  f.fingerprint = "toy";
  Rng rng(3);
  for (double& v : f.values) v = rng.normal();

  SUBCASE("zero parameters give uniform probabilities") {
    Model m = init_model(kFeatureLength, 0, 5, 1, "toy");
    for (auto& l : m.layers) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    for (double p : predict(m, f)) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(argmax(predict(m, f)) == 0);  // ties go to the lowest class
  }
  SUBCASE("a common bias shift does not change probabilities") {
    Model m = init_model(kFeatureLength, 64, 4, 2, "toy");
    const auto before = predict(m, f);
    for (double& b : m.layers.back().bias) b += 3.7;
    const auto after = predict(m, f);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(before[i] - after[i]) < 1e-12);
  }
  SUBCASE("probabilities sum to one and follow logit order") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      Rng r(seed);
      const auto hidden = static_cast<std::size_t>(r.uniform_int(0, 1) * 16);
      const auto classes = static_cast<std::size_t>(r.uniform_int(2, 8));
      Model m = init_model(kFeatureLength, hidden, classes, seed, "toy");
      FeatureVector g;
      g.fingerprint = "toy";
      for (double& v : g.values) v = 3 * r.normal();
      const auto p = predict(m, g);
      double total = 0;
      for (double v : p) total += v;
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
    Model m = init_model(kFeatureLength, 0, 3, 1, "toy");
    std::fill(m.layers[0].weights.begin(), m.layers[0].weights.end(), 0.0);
    m.layers[0].bias = {0.1, 2.0, -1.0};
    const auto p = predict(m, f);
    CHECK(p[1] > p[0]);
    CHECK(p[0] > p[2]);
  }
  SUBCASE("feature layout mismatch is rejected") {
    Model m = init_model(kFeatureLength, 0, 2, 1, "other");
    CHECK_THROWS_AS(predict(m, f), CompatibilityError);
  }
}

TEST_CASE("evaluate") {
  Model m = init_model(kFeatureLength, 0, 2, 1, "toy");
  std::fill(m.layers[0].weights.begin(), m.layers[0].weights.end(), 0.0);
  m.layers[0].bias = {1.0, 0.0};  // always class 0

  LabeledSet half;
  for (int i = 0; i < 10; ++i) {
    FeatureVector f;
    f.fingerprint = "toy";
    half.add(f, i % 2);
  }
  const auto metrics = evaluate(m, half);
  CHECK(metrics.accuracy == 0.5);
  CHECK(metrics.confusion[0][0] == 5);
  CHECK(metrics.confusion[1][0] == 5);
  CHECK(metrics.recall[0] == 1.0);
  CHECK(metrics.recall[1] == 0.0);
  CHECK(metrics.precision[0] == 0.5);

  std::vector<int> labels{0, 1, 2, 1};
  std::vector<std::vector<double>> probs{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.2, 0.7, 0.1}};
  const auto perfect = metrics_from_predictions(3, labels, probs);
  CHECK(perfect.accuracy == 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(perfect.confusion[i][j] == 0);
    }
  }

  Rng rng(4);
  std::vector<int> rl;
  std::vector<std::vector<double>> rp;
  for (int i = 0; i < 57; ++i) {
    rl.push_back(static_cast<int>(rng.uniform_int(0, 3)));
    std::vector<double> p(4);
    for (double& v : p) v = rng.uniform();
    rp.push_back(p);
  }
  const auto rm = metrics_from_predictions(4, rl, rp);
  std::size_t total = 0, trace = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      total += rm.confusion[i][j];
      row += rm.confusion[i][j];
    }
    CHECK(row == static_cast<std::size_t>(std::count(rl.begin(), rl.end(), static_cast<int>(i))));
    trace += rm.confusion[i][i];
  }
  CHECK(total == 57);
  CHECK(rm.accuracy == static_cast<double>(trace) / 57.0);

  CHECK_THROWS_AS(evaluate(m, LabeledSet{}), ArgumentError);
}

TEST_CASE("model persistence") {
  TempDir dir("model_io");
  const auto set = oracle::blobs(60, 3.0, 11);
  const auto model = train(set, {}, 2, quick_config(4));
  save_model(model, dir / "m.json");
  const auto loaded = load_model(dir / "m.json");
  CHECK(loaded == model);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    FeatureVector f;
    f.fingerprint = "toy";
    for (double& v : f.values) v = 2 * rng.normal();
    const auto a = predict(model, f);
    const auto b = predict(loaded, f);
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(std::abs(a[c] - b[c]) < 1e-12);
  }

  const std::string text = read_file(dir / "m.json");
  CHECK(text.find("\"format_version\": 1") != std::string::npos);
  CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), ParseError);
  try {
    model_from_json(text.substr(0, 100));
  } catch (const ParseError& e) {
    CHECK(e.offset() > 0);
  }

  std::string future = text;
  future.replace(future.find("\"format_version\": 1"), 19, "\"format_version\": 7");
  CHECK_THROWS_AS(model_from_json(future), UnsupportedVersionError);

  std::string anonymous = text;
  anonymous.replace(anonymous.find("\"feature_spec_fingerprint\""), 26, "\"something_else\"");
  CHECK_THROWS_AS(model_from_json(anonymous), CompatibilityError);

  CHECK_THROWS_AS(load_model(dir / "missing.json"), IoError);
}
