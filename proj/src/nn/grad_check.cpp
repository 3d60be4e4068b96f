#include "emorec/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "emorec/error.hpp"

namespace emorec::nn {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

namespace {

double finite_loss(const std::function<double()>& loss) {
  const double value = loss();
  if (!std::isfinite(value)) throw NumericError("grad_check: loss is not finite");
  return value;
}

}  // namespace

GradCheckReport grad_check(const std::vector<GradTarget>& targets,
                           const std::function<double()>& loss,
                           const std::function<void()>& compute_analytic,
                           const GradCheckOptions& options) {
  finite_loss(loss);
  compute_analytic();
  // Snapshot: evaluating the loss below may reuse the analytic buffers.
  std::vector<Matrix> analytic;
  analytic.reserve(targets.size());
  for (const auto& t : targets) {
    require_same_shape(*t.value, *t.analytic, t.name.c_str());
    analytic.push_back(*t.analytic);
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  for (std::size_t b = 0; b < targets.size(); ++b) {
    auto values = targets[b].value->data();
    const auto expected = analytic[b].data();
    GradBlockReport block{targets[b].name, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + options.step;
      const double plus = finite_loss(loss);
      values[i] = original - options.step;
      const double minus = finite_loss(loss);
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double denom =
          std::max({std::abs(numeric), std::abs(expected[i]), options.floor});
      block.max_rel_error = std::max(block.max_rel_error, std::abs(numeric - expected[i]) / denom);
    }
    report.blocks.push_back(std::move(block));
  }
  report.passed = report.max_rel_error() < options.tolerance;
  return report;
}

}  // namespace emorec::nn
