#include "emorec/nn/training.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "emorec/error.hpp"

namespace emorec::nn {
namespace {

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EpochRecord& r) {
  return nlohmann::json{{"epoch", r.epoch},
                        {"train_loss", number_or_null(r.train_loss)},
                        {"train_loss_normalized", number_or_null(r.train_loss_normalized)},
                        {"val_UA", number_or_null(r.val_ua)},
                        {"val_WA", number_or_null(r.val_wa)}};
}

double selection_score(const EpochRecord& record) {
  if (std::isfinite(record.val_ua)) return record.val_ua;
  if (std::isfinite(record.val_wa)) return record.val_wa;
  return -1.0;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

ValidationScore score_predictions(std::span<const std::size_t> predictions,
                                  std::span<const std::size_t> labels, std::size_t num_classes) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ValidationScore score{nan, nan};
  if (labels.empty()) return score;
  const auto cm = eval::confusion(predictions, labels, num_classes);
  score.wa = eval::weighted_accuracy(cm);
  try {
    score.ua = eval::unweighted_accuracy(cm);
  } catch (const MetricError&) {
    // A class absent from this split leaves UA undefined; WA still ranks.
  }
  return score;
}

}  // namespace emorec::nn
