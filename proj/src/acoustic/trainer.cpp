#include "emorec/acoustic/trainer.hpp"

#include <cmath>

#include "emorec/error.hpp"

namespace emorec::acoustic {

std::vector<Matrix> load_corpus_features(const data::Corpus& corpus) {
  std::vector<Matrix> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus.utterances) out.push_back(load_feature_csv(corpus.feature_file(u)).frames);
  return out;
}

FeatureNormalizer fit_normalizer(std::span<const Matrix> features,
                                 std::span<const std::size_t> positions) {
  std::vector<const Matrix*> selected;
  selected.reserve(positions.size());
  for (std::size_t i : positions) selected.push_back(&features[i]);
  return FeatureNormalizer::fit(selected);
}

std::vector<AcousticExample> make_examples(const data::Corpus& corpus,
                                           std::span<const Matrix> features,
                                           std::span<const std::size_t> positions,
                                           const FeatureNormalizer& normalizer) {
  if (features.size() != corpus.size()) {
    throw CoverageError("acoustic features cover " + std::to_string(features.size()) + " of " +
                        std::to_string(corpus.size()) + " utterances");
  }
  std::vector<AcousticExample> out;
  out.reserve(positions.size());
  for (std::size_t i : positions) {
    out.push_back({normalizer.apply(features[i]), corpus.utterances.at(i).label});
  }
  return out;
}

Vector acoustic_predict(const AcousticModel& model, const Matrix& frames) {
  nn::Rng unused(0);
  return acoustic_forward(model, frames, nn::Mode::eval, unused).posteriors;
}

namespace {

nn::EpochRecord run_epoch(AcousticModel& model, std::span<const AcousticExample> train,
                          std::span<const AcousticExample> validation,
                          const nn::TrainConfig& config, std::size_t epoch, nn::Rng& rng) {
  nn::EpochRecord record;
  record.epoch = epoch;
  const bool update = epoch > 0;
  const auto batches = nn::make_batches(train.size(), config.batch_size, rng);
  double loss_sum = 0.0;
  for (const auto& batch : batches) {
    if (update) model.zero_grad();
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) {
      const auto mode = update ? nn::Mode::train : nn::Mode::eval;
      const AcousticForward fw = acoustic_forward(model, train[i].frames, mode, rng);
      auto ce = nn::softmax_cross_entropy(fw.logits, train[i].label);
      if (!std::isfinite(ce.loss)) {
        throw NumericError("non-finite acoustic loss at epoch " + std::to_string(epoch));
      }
      loss_sum += ce.loss;
      if (update) {
        for (double& g : ce.grad) g *= scale;
        acoustic_backward(model, fw, ce.grad);
      }
    }
    if (update) {
      for (nn::Parameter* p : model.parameters()) nn::adam_update(*p, config.adam);
    }
  }
  record.train_loss = loss_sum / static_cast<double>(train.size());
  record.train_loss_normalized = record.train_loss;

  std::vector<std::size_t> predictions, labels;
  for (const auto& ex : validation) {
    predictions.push_back(nn::argmax(acoustic_predict(model, ex.frames)));
    labels.push_back(ex.label);
  }
  const auto score = nn::score_predictions(predictions, labels, model.config().num_classes);
  record.val_ua = score.ua;
  record.val_wa = score.wa;
  return record;
}

}  // namespace

AcousticTrainResult train_acoustic(AcousticModel model, std::span<const AcousticExample> train,
                                   std::span<const AcousticExample> validation,
                                   const nn::TrainConfig& config) {
  if (train.empty()) throw PreconditionError("acoustic training set is empty");
  for (const auto& ex : train) {
    if (ex.label >= model.config().num_classes) throw IndexError("training label out of range");
  }
  nn::Rng rng(config.seed);
  AcousticTrainResult result;
  const bool select = config.keep_best && !validation.empty();
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const nn::EpochRecord record = run_epoch(model, train, validation, config, epoch, rng);
    result.log.push_back(record);
    const double current = nn::selection_score(record);
    if (select && (epoch == 0 || current >= result.best_selection)) {
      result.best_selection = current;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  if (!select) {
    result.best_selection = nn::selection_score(result.log.back());
    result.best_epoch = config.epochs;
    result.model = std::move(model);
  }
  return result;
}

}  // namespace emorec::acoustic
