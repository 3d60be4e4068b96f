#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emorec/acoustic/features.hpp"
#include "emorec/acoustic/model.hpp"
#include "emorec/data/corpus.hpp"
#include "emorec/nn/training.hpp"

namespace emorec::acoustic {

struct AcousticExample {
  Matrix frames;  // already normalized
  std::size_t label = 0;
};

/// Loads every utterance's feature CSV, aligned with corpus.utterances.
/// Throws CoverageError for an utterance without a feature reference.
std::vector<Matrix> load_corpus_features(const data::Corpus& corpus);

/// Normalizer fit on the given positions only.
FeatureNormalizer fit_normalizer(std::span<const Matrix> features,
                                 std::span<const std::size_t> positions);

std::vector<AcousticExample> make_examples(const data::Corpus& corpus,
                                           std::span<const Matrix> features,
                                           std::span<const std::size_t> positions,
                                           const FeatureNormalizer& normalizer);

/// Eval-mode posteriors.
Vector acoustic_predict(const AcousticModel& model, const Matrix& frames);

struct AcousticTrainResult {
  AcousticModel model;
  std::vector<nn::EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_selection = -1.0;
};

/// Mini-batch cross-entropy training; each sequence in a batch runs on its
/// own and the batch gradient is the mean over its sequences. Epoch 0 logs
/// the eval-mode loss of the untrained model.
AcousticTrainResult train_acoustic(AcousticModel model, std::span<const AcousticExample> train,
                                   std::span<const AcousticExample> validation,
                                   const nn::TrainConfig& config);

}  // namespace emorec::acoustic
