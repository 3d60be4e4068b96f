#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "emorec/eval/metrics.hpp"
#include "emorec/nn/parameter.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::nn {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 40;
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Return the snapshot with the best validation score instead of the
  /// final parameters.
  bool keep_best = true;
};

/// One line of the epoch log. Epoch 0 is measured before any update.
struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_loss_normalized = 0.0;
  double val_ua = 0.0;  // NaN when undefined (no validation data or an empty class)
  double val_wa = 0.0;
};

nlohmann::json to_json(const EpochRecord& record);

/// Validation UA when defined, else WA, else -1.
double selection_score(const EpochRecord& record);

/// Shuffled mini-batches of positions [0, n).
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

struct ValidationScore {
  double ua = 0.0;
  double wa = 0.0;
};

ValidationScore score_predictions(std::span<const std::size_t> predictions,
                                  std::span<const std::size_t> labels, std::size_t num_classes);

}  // namespace emorec::nn
