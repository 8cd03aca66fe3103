#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ghostdet/classifier.hpp"
#include "ghostdet/random.hpp"

namespace oracle {

inline std::vector<double*> parameters(ghostdet::Model& m) {
  std::vector<double*> out;
  for (auto& l : m.layers) {
    for (double& w : l.weights) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
  }
  return out;
}

inline std::vector<double> flatten(const std::vector<ghostdet::DenseLayer>& layers) {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

// Largest relative error between the analytic gradient and central
// differences over `samples` randomly chosen parameters (0 checks all).
inline double gradient_check(std::size_t hidden, std::uint64_t seed, std::size_t samples) {
  ghostdet::Rng rng(seed);
  const std::size_t classes = 2 + seed % 4;
  ghostdet::Model model = ghostdet::init_model(ghostdet::kFeatureLength, hidden, classes, seed, "toy");
  for (auto& l : model.layers) {
    for (double& b : l.bias) b = 0.2 * rng.normal();
  }
  std::vector<std::vector<double>> x(6, std::vector<double>(ghostdet::kFeatureLength));
  std::vector<int> y(6);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double& v : x[i]) v = rng.normal();
    y[i] = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(classes) - 1));
  }
  const double l2 = 1e-3;
  const auto analytic = flatten(ghostdet::loss_and_gradient(model, x, y, l2).gradient);
  auto params = parameters(model);
  double worst = 0.0;
  const double h = 1e-5;
  const std::size_t count = samples == 0 ? params.size() : samples;
  for (std::size_t s = 0; s < count; ++s) {
    const auto idx = samples == 0 ? s
                                  : static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(params.size()) - 1));
    const double saved = *params[idx];
    *params[idx] = saved + h;
    const double up = ghostdet::loss_only(model, x, y, l2);
    *params[idx] = saved - h;
    const double down = ghostdet::loss_only(model, x, y, l2);
    *params[idx] = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[idx]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[idx]) / scale);
  }
  return worst;
}

}  // namespace oracle
