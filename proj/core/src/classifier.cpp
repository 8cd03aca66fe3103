#include "ghostdet/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ghostdet/error.hpp"
#include "ghostdet/random.hpp"

namespace ghostdet {

namespace {

using Vec = std::vector<double>;

// Substream indices under the training seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;

struct Activations {
  Vec hidden;  // tanh outputs, empty without a hidden layer
  Vec logits;
};

void affine(const DenseLayer& layer, std::span<const double> in, Vec& out) {
  out.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t r = 0; r < layer.rows; ++r) {
    const double* w = layer.weights.data() + r * layer.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < layer.cols; ++c) acc += w[c] * in[c];
    out[r] += acc;
  }
}

Activations forward(const Model& model, std::span<const double> input) {
  Activations act;
  if (model.hidden_dim > 0) {
    affine(model.layers[0], input, act.hidden);
    for (double& v : act.hidden) v = std::tanh(v);
    affine(model.layers[1], act.hidden, act.logits);
  } else {
    affine(model.layers[0], input, act.logits);
  }
  return act;
}

double log_sum_exp(const Vec& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

Vec softmax(const Vec& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double weight_penalty(const Model& model, double l2) {
  if (l2 == 0.0) return 0.0;
  double acc = 0.0;
  for (const auto& layer : model.layers) {
    for (double w : layer.weights) acc += w * w;
  }
  return 0.5 * l2 * acc;
}

std::vector<DenseLayer> zeros_like(const std::vector<DenseLayer>& layers) {
  std::vector<DenseLayer> out;
  for (const auto& l : layers) {
    out.push_back(DenseLayer{l.rows, l.cols, Vec(l.weights.size(), 0.0), Vec(l.bias.size(), 0.0)});
  }
  return out;
}

void check_inputs(std::span<const std::vector<double>> inputs, std::span<const int> labels,
                  const Model& model) {
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw ArgumentError("loss needs a non-empty batch with one label per input");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != model.input_dim) throw DimensionError("input length != input_dim");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= model.n_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " +
                      std::to_string(model.n_classes) + ")");
    }
  }
}

bool all_finite(const Model& model) {
  for (const auto& l : model.layers) {
    for (double w : l.weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : l.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

Normalization fit_normalization(const LabeledSet& set) {
  const std::size_t dim = kFeatureLength;
  const auto n = static_cast<double>(set.size());
  Normalization norm{Vec(dim, 0.0), Vec(dim, 0.0)};
  for (const auto& f : set.features) {
    for (std::size_t d = 0; d < dim; ++d) norm.means[d] += f.values[d];
  }
  for (double& m : norm.means) m /= n;
  for (const auto& f : set.features) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double dev = f.values[d] - norm.means[d];
      norm.stds[d] += dev * dev;
    }
  }
  for (double& s : norm.stds) {
    s = std::sqrt(s / n);
    // Degenerate features pass through centered but unscaled.
    if (!(s > 1e-12)) s = 1.0;
  }
  return norm;
}

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const nlohmann::json& j) {
  if (!j.is_string()) throw ParseError("model parameter is not a hex-float string", 0);
  const auto s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError("bad model parameter '" + s + "'", 0);
  }
  return v;
}

nlohmann::json hex_array(const Vec& values) {
  auto arr = nlohmann::json::array();
  for (double v : values) arr.push_back(hex(v));
  return arr;
}

Vec unhex_array(const nlohmann::json& j, std::size_t expected, const char* what) {
  if (!j.is_array() || j.size() != expected) {
    throw ParseError(std::string(what) + " must be an array of " + std::to_string(expected) +
                         " values",
                     0);
  }
  Vec out;
  out.reserve(expected);
  for (const auto& v : j) out.push_back(unhex(v));
  return out;
}

}  // namespace

Model init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t n_classes,
                 std::uint64_t seed, std::string fingerprint) {
  if (n_classes < 2) throw ArgumentError("a classifier needs at least 2 classes");
  if (input_dim == 0) throw ArgumentError("input_dim must be positive");
  Model model;
  model.input_dim = input_dim;
  model.hidden_dim = hidden_dim;
  model.n_classes = n_classes;
  model.normalization = {Vec(input_dim, 0.0), Vec(input_dim, 1.0)};
  model.feature_spec_fingerprint = std::move(fingerprint);

  Rng rng = Rng::substream(seed, kInitStream);
  auto make_layer = [&rng](std::size_t rows, std::size_t cols) {
    DenseLayer layer{rows, cols, Vec(rows * cols), Vec(rows, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& w : layer.weights) w = (2.0 * rng.uniform() - 1.0) * limit;
    return layer;
  };
  if (hidden_dim > 0) {
    model.layers.push_back(make_layer(hidden_dim, input_dim));
    model.layers.push_back(make_layer(n_classes, hidden_dim));
  } else {
    model.layers.push_back(make_layer(n_classes, input_dim));
  }
  return model;
}

std::vector<double> standardize(const Model& model, const FeatureVector& features) {
  if (features.fingerprint != model.feature_spec_fingerprint) {
    throw CompatibilityError("feature fingerprint " + features.fingerprint +
                             " does not match model fingerprint " +
                             model.feature_spec_fingerprint);
  }
  if (model.input_dim != features.values.size()) {
    throw CompatibilityError("model expects " + std::to_string(model.input_dim) + " features");
  }
  Vec x(model.input_dim);
  for (std::size_t d = 0; d < x.size(); ++d) {
    x[d] = (features.values[d] - model.normalization.means[d]) / model.normalization.stds[d];
  }
  return x;
}

std::vector<double> predict_standardized(const Model& model, std::span<const double> input) {
  if (input.size() != model.input_dim) throw DimensionError("input length != input_dim");
  return softmax(forward(model, input).logits);
}

std::vector<double> predict(const Model& model, const FeatureVector& features) {
  return predict_standardized(model, standardize(model, features));
}

int argmax(std::span<const double> probabilities) {
  if (probabilities.empty()) throw ArgumentError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return static_cast<int>(best);
}

LossGradient loss_and_gradient(const Model& model, std::span<const std::vector<double>> inputs,
                               std::span<const int> labels, double l2) {
  check_inputs(inputs, labels, model);
  LossGradient out{0.0, zeros_like(model.layers)};
  const double inv_batch = 1.0 / static_cast<double>(inputs.size());
  DenseLayer& g_out = out.gradient.back();
  const DenseLayer& w_out = model.layers.back();

  Vec dlogits(model.n_classes);
  Vec dhidden;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto act = forward(model, inputs[i]);
    const auto y = static_cast<std::size_t>(labels[i]);
    out.loss += (log_sum_exp(act.logits) - act.logits[y]) * inv_batch;

    const Vec p = softmax(act.logits);
    for (std::size_t c = 0; c < model.n_classes; ++c) {
      dlogits[c] = (p[c] - (c == y ? 1.0 : 0.0)) * inv_batch;
    }
    const std::span<const double> below =
        model.hidden_dim > 0 ? std::span<const double>(act.hidden) : std::span<const double>(inputs[i]);
    for (std::size_t r = 0; r < g_out.rows; ++r) {
      g_out.bias[r] += dlogits[r];
      double* g = g_out.weights.data() + r * g_out.cols;
      for (std::size_t c = 0; c < g_out.cols; ++c) g[c] += dlogits[r] * below[c];
    }
    if (model.hidden_dim == 0) continue;

    dhidden.assign(model.hidden_dim, 0.0);
    for (std::size_t r = 0; r < w_out.rows; ++r) {
      const double* w = w_out.weights.data() + r * w_out.cols;
      for (std::size_t h = 0; h < model.hidden_dim; ++h) dhidden[h] += w[h] * dlogits[r];
    }
    DenseLayer& g_in = out.gradient.front();
    const auto& x = inputs[i];
    for (std::size_t h = 0; h < model.hidden_dim; ++h) {
      const double dz = dhidden[h] * (1.0 - act.hidden[h] * act.hidden[h]);
      g_in.bias[h] += dz;
      double* g = g_in.weights.data() + h * g_in.cols;
      for (std::size_t c = 0; c < g_in.cols; ++c) g[c] += dz * x[c];
    }
  }

  if (l2 != 0.0) {
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto& w = model.layers[l].weights;
      auto& g = out.gradient[l].weights;
      for (std::size_t k = 0; k < w.size(); ++k) g[k] += l2 * w[k];
    }
    out.loss += weight_penalty(model, l2);
  }
  return out;
}

double loss_only(const Model& model, std::span<const std::vector<double>> inputs,
                 std::span<const int> labels, double l2) {
  check_inputs(inputs, labels, model);
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto act = forward(model, inputs[i]);
    loss += log_sum_exp(act.logits) - act.logits[static_cast<std::size_t>(labels[i])];
  }
  return loss / static_cast<double>(inputs.size()) + weight_penalty(model, l2);
}

TrainResult fit(const LabeledSet& train_set, const LabeledSet& validation, std::size_t n_classes,
                const TrainConfig& config) {
  if (n_classes < 2) throw ArgumentError("a classifier needs at least 2 classes");
  if (!(config.learning_rate > 0.0) || !(config.momentum >= 0.0 && config.momentum < 1.0) ||
      config.batch_size == 0 || config.epochs == 0 || !(config.l2 >= 0.0)) {
    throw ArgumentError("invalid training configuration");
  }
  if (train_set.size() == 0 || train_set.features.size() != train_set.size()) {
    throw DataError("training split is empty");
  }
  std::vector<std::size_t> per_class(n_classes, 0);
  for (int label : train_set.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw DataError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(n_classes) + ")");
    }
    ++per_class[static_cast<std::size_t>(label)];
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (per_class[c] == 0) {
      throw DataError("class " + std::to_string(c) + " has no samples in the training split");
    }
  }
  const std::string& fingerprint = train_set.features.front().fingerprint;
  for (const auto& f : train_set.features) {
    if (f.fingerprint != fingerprint) throw CompatibilityError("mixed feature layouts in training data");
  }

  Model model = init_model(kFeatureLength, config.hidden_dim, n_classes, config.seed, fingerprint);
  model.normalization = fit_normalization(train_set);

  std::vector<Vec> x_train;
  x_train.reserve(train_set.size());
  for (const auto& f : train_set.features) x_train.push_back(standardize(model, f));
  std::vector<Vec> x_val;
  x_val.reserve(validation.size());
  for (const auto& f : validation.features) x_val.push_back(standardize(model, f));

  auto velocity = zeros_like(model.layers);
  Rng shuffle_rng = Rng::substream(config.seed, kShuffleStream);
  std::vector<std::size_t> order(x_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<Vec> batch_x;
  std::vector<int> batch_y;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch_x.push_back(x_train[order[i]]);
        batch_y.push_back(train_set.labels[order[i]]);
      }
      const auto lg = loss_and_gradient(model, batch_x, batch_y, config.l2);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        auto& vel = velocity[l];
        const auto& grad = lg.gradient[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
          vel.weights[k] = config.momentum * vel.weights[k] - config.learning_rate * grad.weights[k];
          layer.weights[k] += vel.weights[k];
        }
        for (std::size_t k = 0; k < layer.bias.size(); ++k) {
          vel.bias[k] = config.momentum * vel.bias[k] - config.learning_rate * grad.bias[k];
          layer.bias[k] += vel.bias[k];
        }
      }
    }

    const double train_loss = loss_only(model, x_train, train_set.labels, config.l2);
    if (!std::isfinite(train_loss) || !all_finite(model)) {
      throw DivergenceError("training loss became non-finite", epoch);
    }
    result.train_loss.push_back(train_loss);
    double monitored = train_loss;
    if (!x_val.empty()) {
      monitored = loss_only(model, x_val, validation.labels, config.l2);
      if (!std::isfinite(monitored)) throw DivergenceError("validation loss became non-finite", epoch);
      result.val_loss.push_back(monitored);
    }
    if (monitored < best_loss) {
      best_loss = monitored;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

Model train(const LabeledSet& train_set, const LabeledSet& validation, std::size_t n_classes,
            const TrainConfig& config) {
  return fit(train_set, validation, n_classes, config).model;
}

Metrics metrics_from_predictions(std::size_t n_classes, std::span<const int> labels,
                                 std::span<const std::vector<double>> probabilities) {
  if (labels.empty()) throw ArgumentError("cannot evaluate an empty set");
  if (labels.size() != probabilities.size()) throw DimensionError("label/prediction count mismatch");
  Metrics m;
  m.total = labels.size();
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  double ce = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= n_classes || probabilities[i].size() != n_classes) {
      throw DataError("label or probability vector outside the class range");
    }
    const auto pred = static_cast<std::size_t>(argmax(probabilities[i]));
    ++m.confusion[y][pred];
    ce -= std::log(std::max(probabilities[i][y], std::numeric_limits<double>::min()));
  }
  m.mean_cross_entropy = ce / static_cast<double>(m.total);
  std::size_t trace = 0;
  m.precision.assign(n_classes, 0.0);
  m.recall.assign(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    trace += m.confusion[c][c];
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t o = 0; o < n_classes; ++o) {
      row += m.confusion[c][o];
      col += m.confusion[o][c];
    }
    if (col > 0) m.precision[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(col);
    if (row > 0) m.recall[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(row);
  }
  m.accuracy = static_cast<double>(trace) / static_cast<double>(m.total);
  return m;
}

Metrics evaluate(const Model& model, const LabeledSet& set) {
  if (set.size() == 0) throw ArgumentError("cannot evaluate an empty set");
  std::vector<Vec> probs;
  probs.reserve(set.size());
  for (const auto& f : set.features) probs.push_back(predict(model, f));
  return metrics_from_predictions(model.n_classes, set.labels, probs);
}

std::string model_to_json(const Model& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["input_dim"] = model.input_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["n_classes"] = model.n_classes;
  j["normalization"] = {{"means", hex_array(model.normalization.means)},
                        {"stds", hex_array(model.normalization.stds)}};
  auto layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"rows", l.rows},
                      {"cols", l.cols},
                      {"weights", hex_array(l.weights)},
                      {"bias", hex_array(l.bias)}});
  }
  j["layers"] = std::move(layers);
  j["feature_spec_fingerprint"] = model.feature_spec_fingerprint;
  return j.dump(1) + "\n";
}

Model model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what(), e.byte);
  }
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw ParseError("model JSON has no format_version", 0);
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw UnsupportedVersionError("unsupported model format_version " + std::to_string(version));
    }
    if (!j.contains("feature_spec_fingerprint") || !j["feature_spec_fingerprint"].is_string()) {
      throw CompatibilityError("model file carries no feature_spec_fingerprint");
    }
    Model m;
    m.input_dim = j.at("input_dim").get<std::size_t>();
    m.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.feature_spec_fingerprint = j["feature_spec_fingerprint"].get<std::string>();
    if (m.n_classes < 2 || m.input_dim == 0) throw ParseError("invalid model dimensions", 0);
    const auto& norm = j.at("normalization");
    m.normalization.means = unhex_array(norm.at("means"), m.input_dim, "normalization.means");
    m.normalization.stds = unhex_array(norm.at("stds"), m.input_dim, "normalization.stds");
    for (double s : m.normalization.stds) {
      if (!(s > 0.0)) throw ParseError("normalization std must be positive", 0);
    }
    const auto& layers = j.at("layers");
    const std::size_t expected_layers = m.hidden_dim > 0 ? 2 : 1;
    if (!layers.is_array() || layers.size() != expected_layers) {
      throw ParseError("unexpected layer count", 0);
    }
    std::size_t in = m.input_dim;
    for (std::size_t i = 0; i < expected_layers; ++i) {
      const auto& lj = layers[i];
      DenseLayer l;
      l.rows = lj.at("rows").get<std::size_t>();
      l.cols = lj.at("cols").get<std::size_t>();
      const std::size_t out = i + 1 == expected_layers ? m.n_classes : m.hidden_dim;
      if (l.rows != out || l.cols != in) throw ParseError("layer shape mismatch", 0);
      l.weights = unhex_array(lj.at("weights"), l.rows * l.cols, "weights");
      l.bias = unhex_array(lj.at("bias"), l.rows, "bias");
      m.layers.push_back(std::move(l));
      in = out;
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid model JSON: ") + e.what(), 0);
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw IoError("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return model_from_json(text);
}

}  // namespace ghostdet
