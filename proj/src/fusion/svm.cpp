#include "emorec/fusion/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "emorec/error.hpp"
#include "emorec/nn/layers.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::fusion {
namespace {

// Primal objective of one binary problem on the augmented representation.
double binary_objective(std::span<const double> w, double b, double lambda,
                        std::span<const Vector> xs, std::span<const double> ys) {
  double reg = nn::dot(w, w) + b * b;
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    hinge += std::max(0.0, 1.0 - ys[i] * (nn::dot(w, xs[i]) + b));
  }
  return 0.5 * lambda * reg + hinge / static_cast<double>(xs.size());
}

}  // namespace

LinearSvmModel svm_fit(std::span<const Vector> features, std::span<const std::size_t> labels,
                       std::size_t num_classes, const SvmConfig& config, SvmFitLog* log) {
  if (features.size() != labels.size()) throw ShapeError("svm features and labels differ in count");
  if (features.empty()) throw DegenerateDataError("svm fit on no examples");
  if (!(config.c_reg > 0.0)) throw ConfigError("svm regularization constant must be positive");
  if (config.epochs == 0) throw ConfigError("svm epochs must be positive");
  const std::size_t dim = features.front().size();
  for (const auto& x : features) {
    if (x.size() != dim) throw ShapeError("svm feature vectors differ in dimension");
  }
  std::set<std::size_t> present;
  for (std::size_t y : labels) {
    if (y >= num_classes) throw IndexError("svm label out of range");
    present.insert(y);
  }
  if (present.size() < 2) throw DegenerateDataError("svm needs at least two classes in training data");

  const std::size_t n = features.size();
  const double lambda = 1.0 / (config.c_reg * static_cast<double>(n));
  LinearSvmModel model;
  model.c_reg = config.c_reg;
  model.weights.assign(num_classes, Vector(dim, 0.0));
  model.bias.assign(num_classes, 0.0);

  std::vector<std::vector<double>> targets(num_classes, std::vector<double>(n));
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) targets[c][i] = labels[i] == c ? 1.0 : -1.0;
  }
  auto mean_objective = [&] {
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      total += binary_objective(model.weights[c], model.bias[c], lambda, features, targets[c]);
    }
    return total / static_cast<double>(num_classes);
  };
  if (log != nullptr) log->initial_objective = mean_objective();

  nn::Rng rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t i : order) {
      ++step;
      const double eta = 1.0 / (lambda * static_cast<double>(step));
      const double shrink = 1.0 - eta * lambda;
      const auto& x = features[i];
      for (std::size_t c = 0; c < num_classes; ++c) {
        Vector& w = model.weights[c];
        double& b = model.bias[c];
        const double y = targets[c][i];
        const bool violated = y * (nn::dot(w, x) + b) < 1.0;
        for (double& v : w) v *= shrink;
        b *= shrink;
        if (violated) {
          for (std::size_t j = 0; j < dim; ++j) w[j] += eta * y * x[j];
          b += eta * y;
        }
      }
    }
    if (log != nullptr) log->epoch_objective.push_back(mean_objective());
  }
  return model;
}

SvmPrediction svm_predict(const LinearSvmModel& model, std::span<const double> features) {
  if (features.size() != model.dim()) {
    throw ShapeError("svm expects " + std::to_string(model.dim()) + " features, got " +
                     std::to_string(features.size()));
  }
  SvmPrediction out;
  out.margins.resize(model.num_classes());
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    out.margins[c] = nn::dot(model.weights[c], features) + model.bias[c];
  }
  out.label = nn::argmax(out.margins);
  return out;
}

}  // namespace emorec::fusion
