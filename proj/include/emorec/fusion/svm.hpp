#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::fusion {

using nn::Vector;

struct SvmConfig {
  double c_reg = 1.0;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM. Class c scores x as weights[c] . x + bias[c].
struct LinearSvmModel {
  std::vector<Vector> weights;
  Vector bias;
  double c_reg = 1.0;

  std::size_t num_classes() const noexcept { return weights.size(); }
  std::size_t dim() const noexcept { return weights.empty() ? 0 : weights.front().size(); }
};

/// Mean over classes of the per-class primal objective
/// lambda/2 ||w||^2 + mean hinge, recorded after every epoch.
struct SvmFitLog {
  double initial_objective = 0.0;
  std::vector<double> epoch_objective;
};

/// Pegasos-style stochastic subgradient descent on each one-vs-rest problem
/// with lambda = 1 / (C n) and step 1 / (lambda t). The bias is learned as
/// the weight of a constant feature.
LinearSvmModel svm_fit(std::span<const Vector> features, std::span<const std::size_t> labels,
                       std::size_t num_classes, const SvmConfig& config = {},
                       SvmFitLog* log = nullptr);

struct SvmPrediction {
  std::size_t label = 0;
  Vector margins;
};

/// Argmax of the per-class margins; ties go to the lowest class index.
SvmPrediction svm_predict(const LinearSvmModel& model, std::span<const double> features);

}  // namespace emorec::fusion
