#pragma once

#include <functional>
#include <string>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::nn {

/// A block of values to perturb plus the buffer where the analytic gradient
/// for that block lands.
struct GradTarget {
  std::string name;
  Matrix* value;
  const Matrix* analytic;
};

struct GradBlockReport {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradBlockReport> blocks;
  double tolerance = 0.0;
  bool passed = false;

  double max_rel_error() const;
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  /// Denominator floor so entries whose true gradient is ~0 are judged on
  /// absolute error.
  double floor = 1e-6;
};

/// Central finite-difference check. `compute_analytic` must refresh every
/// target's analytic buffer for the current values; `loss` evaluates the
/// scalar objective. Throws NumericError on a non-finite loss.
GradCheckReport grad_check(const std::vector<GradTarget>& targets,
                           const std::function<double()>& loss,
                           const std::function<void()>& compute_analytic,
                           const GradCheckOptions& options = {});

}  // namespace emorec::nn
