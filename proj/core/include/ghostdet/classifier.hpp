#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ghostdet/spectral.hpp"

namespace ghostdet {

inline constexpr int kModelFormatVersion = 1;

/// Fully connected layer: out = weights * in + bias, weights row-major
/// `rows` (outputs) x `cols` (inputs).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Per-feature standardization fitted on the training split.
struct Normalization {
  std::vector<double> means;
  std::vector<double> stds;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Softmax classifier over standardized feature vectors, with an optional
/// tanh hidden layer (hidden_dim == 0 gives plain softmax regression).
struct Model {
  std::size_t input_dim = kFeatureLength;
  std::size_t hidden_dim = 0;
  std::size_t n_classes = 2;
  Normalization normalization;
  std::vector<DenseLayer> layers;
  std::string feature_spec_fingerprint;

  friend bool operator==(const Model&, const Model&) = default;
};

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 10;
  std::size_t hidden_dim = 64;
};

struct LabeledSet {
  std::vector<FeatureVector> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  void add(FeatureVector f, int label) {
    features.push_back(std::move(f));
    labels.push_back(label);
  }
};

struct TrainResult {
  Model model;
  std::vector<double> train_loss;  // per epoch, on the full training split
  std::vector<double> val_loss;    // per epoch; empty without a validation split
  std::size_t best_epoch = 0;      // 1-based epoch whose parameters were kept
};

/// Mini-batch SGD with momentum on mean cross-entropy + (l2 / 2) * |W|^2
/// (weights only). Returns the parameters with the lowest validation loss
/// (training loss when `validation` is empty); stops after
/// `early_stop_patience` epochs without improvement. Deterministic in
/// (data, config).
TrainResult fit(const LabeledSet& train, const LabeledSet& validation, std::size_t n_classes,
                const TrainConfig& config);
Model train(const LabeledSet& train, const LabeledSet& validation, std::size_t n_classes,
            const TrainConfig& config);

/// Model with Xavier-uniform weights drawn from `seed`, zero biases and an
/// identity normalization.
Model init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes,
                 std::uint64_t seed, std::string fingerprint);

/// Class probabilities. Throws CompatibilityError when the vector's
/// fingerprint differs from the model's.
std::vector<double> predict(const Model& model, const FeatureVector& features);
/// Probabilities for an already standardized input.
std::vector<double> predict_standardized(const Model& model, std::span<const double> input);

/// Argmax with ties broken toward the lower class index.
int argmax(std::span<const double> probabilities);

std::vector<double> standardize(const Model& model, const FeatureVector& features);

/// Loss and gradient of mean cross-entropy + (l2 / 2) * |W|^2 over a batch of
/// standardized inputs. `gradient` has the same layer shapes as the model.
struct LossGradient {
  double loss = 0.0;
  std::vector<DenseLayer> gradient;
};
LossGradient loss_and_gradient(const Model& model, std::span<const std::vector<double>> inputs,
                               std::span<const int> labels, double l2);
double loss_only(const Model& model, std::span<const std::vector<double>> inputs,
                 std::span<const int> labels, double l2);

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  double mean_cross_entropy = 0.0;
  std::size_t total = 0;
};

/// Metrics from explicit (label, probabilities) pairs.
Metrics metrics_from_predictions(std::size_t n_classes, std::span<const int> labels,
                                 std::span<const std::vector<double>> probabilities);
Metrics evaluate(const Model& model, const LabeledSet& set);

std::string model_to_json(const Model& model);
Model model_from_json(std::string_view text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace ghostdet
