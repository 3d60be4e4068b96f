#include "emorec/text/trainer.hpp"

#include <cmath>

#include "emorec/error.hpp"
#include "emorec/text/objective.hpp"

namespace emorec::text {

std::vector<TextExample> encode_examples(const data::Corpus& corpus,
                                         std::span<const std::size_t> positions,
                                         const Vocabulary& vocab) {
  std::vector<TextExample> out;
  out.reserve(positions.size());
  for (std::size_t i : positions) {
    const auto& u = corpus.utterances.at(i);
    out.push_back({vocab.encode(u.tokens), u.label});
  }
  return out;
}

Vocabulary build_vocabulary(const data::Corpus& corpus, std::span<const std::size_t> positions) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(positions.size());
  for (std::size_t i : positions) docs.push_back(corpus.utterances.at(i).tokens);
  return Vocabulary::build(docs);
}

McnnForward mcnn_predict(const McnnModel& model, const TextExample& example) {
  return mcnn_forward(model, pad_tokens(example.indices, model.config().max_kernel()));
}

namespace {

nn::ValidationScore validate(const McnnModel& model, std::span<const TextExample> examples) {
  std::vector<std::size_t> predictions, labels;
  for (const auto& ex : examples) {
    predictions.push_back(nn::argmax(mcnn_predict(model, ex).posteriors));
    labels.push_back(ex.label);
  }
  return nn::score_predictions(predictions, labels, model.config().num_classes);
}

struct BatchResult {
  double total = 0.0;
  double normalized = 0.0;
};

// Forward + objective for one batch; with `update`, also backward and Adam.
BatchResult run_batch(McnnModel& model, std::span<const TextExample> data,
                      const std::vector<std::size_t>& batch, const nn::TrainConfig& config,
                      bool update) {
  const std::size_t max_kernel = model.config().max_kernel();
  std::vector<McnnForward> forwards;
  std::vector<PairSample> samples;
  forwards.reserve(batch.size());
  samples.reserve(batch.size());
  for (std::size_t i : batch) {
    forwards.push_back(mcnn_forward(model, pad_tokens(data[i].indices, max_kernel)));
    samples.push_back({forwards.back().embedding, forwards.back().logits, data[i].label});
  }
  const BatchObjective objective = batch_objective(samples, model.config().lambda);
  if (update) {
    model.zero_grad();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      mcnn_backward(model, forwards[b], objective.embedding_grads[b], objective.logits_grads[b]);
    }
    for (nn::Parameter* p : model.parameters()) nn::adam_update(*p, config.adam);
    model.clamp_padding_row();
  }
  return {objective.total, objective.normalized};
}

nn::EpochRecord run_epoch(McnnModel& model, std::span<const TextExample> train,
                          std::span<const TextExample> validation, const nn::TrainConfig& config,
                          std::size_t epoch, nn::Rng& rng) {
  nn::EpochRecord record;
  record.epoch = epoch;
  const auto batches = nn::make_batches(train.size(), config.batch_size, rng);
  for (const auto& batch : batches) {
    const BatchResult r = run_batch(model, train, batch, config, epoch > 0);
    if (!std::isfinite(r.total)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
    }
    record.train_loss += r.total;
    record.train_loss_normalized += r.normalized;
  }
  if (!batches.empty()) record.train_loss_normalized /= static_cast<double>(batches.size());
  const auto score = validate(model, validation);
  record.val_ua = score.ua;
  record.val_wa = score.wa;
  return record;
}

}  // namespace

TextTrainResult train_text_model(McnnModel model, std::span<const TextExample> train,
                                 std::span<const TextExample> validation,
                                 const nn::TrainConfig& config) {
  if (train.empty()) throw PreconditionError("text training set is empty");
  for (const auto& ex : train) {
    if (ex.label >= model.config().num_classes) throw IndexError("training label out of range");
  }
  nn::Rng rng(config.seed);
  TextTrainResult result;
  const bool select = config.keep_best && !validation.empty();
  for (std::size_t epoch = 0; epoch <= config.epochs; ++epoch) {
    const nn::EpochRecord record = run_epoch(model, train, validation, config, epoch, rng);
    result.log.push_back(record);
    const double current = nn::selection_score(record);
    // Later epochs win ties.
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

LambdaSearch select_lambda(const McnnModel& initial, std::span<const TextExample> train,
                           std::span<const TextExample> validation, const nn::TrainConfig& config,
                           const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  LambdaSearch search;
  bool have_best = false;
  for (double lambda : grid) {
    // Same initial weights, different objective weight.
    McnnModel candidate = initial;
    candidate.set_lambda(lambda);
    TextTrainResult trained = train_text_model(std::move(candidate), train, validation, config);
    search.trials.push_back({lambda, trained.best_selection});
    if (!have_best || trained.best_selection > search.best.best_selection) {
      search.best_lambda = lambda;
      search.best = std::move(trained);
      have_best = true;
    }
  }
  return search;
}

std::vector<std::size_t> arithmetic_kernels(std::size_t count, std::size_t step) {
  if (count == 0 || step == 0) throw ConfigError("kernel count and step must be positive");
  std::vector<std::size_t> sizes(count);
  for (std::size_t i = 0; i < count; ++i) sizes[i] = 1 + i * step;
  return sizes;
}

std::vector<SweepRow> sweep_modules(const data::Corpus& corpus, const data::FoldPlan& plan,
                                    std::size_t max_modules, McnnConfig base,
                                    std::size_t kernel_step, std::size_t rounds,
                                    const nn::TrainConfig& config) {
  if (max_modules == 0) throw ConfigError("max_modules must be positive");
  if (rounds == 0 || rounds > plan.num_folds()) throw ConfigError("sweep rounds out of range");
  base.lambda = 0.0;
  std::vector<SweepRow> rows;
  for (std::size_t n = 1; n <= max_modules; ++n) {
    McnnConfig cfg = base;
    cfg.kernel_sizes = arithmetic_kernels(n, kernel_step);
    cfg.validate();
    eval::ConfusionMatrix pooled(corpus.num_classes(), corpus.label_names);
    for (std::size_t r = 0; r < rounds; ++r) {
      const data::Round round = plan.round(r);
      const Vocabulary vocab = build_vocabulary(corpus, round.train);
      const auto train = encode_examples(corpus, round.train, vocab);
      const auto val = encode_examples(corpus, round.validation, vocab);
      const auto test = encode_examples(corpus, round.test, vocab);
      nn::Rng init_rng(config.seed + 7919 * r);
      McnnModel model(cfg, vocab.size(), init_rng);
      nn::TrainConfig round_config = config;
      round_config.seed = config.seed + r;
      const auto trained = train_text_model(std::move(model), train, val, round_config);
      for (const auto& ex : test) {
        pooled.add(ex.label, nn::argmax(mcnn_predict(trained.model, ex).posteriors));
      }
    }
    SweepRow row{n, cfg.kernel_sizes, 0.0, eval::weighted_accuracy(pooled)};
    row.ua = eval::unweighted_accuracy(pooled);
    rows.push_back(std::move(row));
  }
  return rows;
}

EmbeddingGeometry embedding_geometry(const McnnModel& model, std::span<const TextExample> examples) {
  std::vector<Vector> embeddings;
  for (const auto& ex : examples) embeddings.push_back(mcnn_predict(model, ex).embedding);
  double intra = 0.0, inter = 0.0;
  std::size_t n_intra = 0, n_inter = 0;
  for (std::size_t a = 0; a < embeddings.size(); ++a) {
    for (std::size_t b = a + 1; b < embeddings.size(); ++b) {
      const double c = cosine_similarity(embeddings[a], embeddings[b]);
      if (examples[a].label == examples[b].label) {
        intra += c;
        ++n_intra;
      } else {
        inter += c;
        ++n_inter;
      }
    }
  }
  if (n_intra == 0 || n_inter == 0) {
    throw DegenerateDataError("embedding geometry needs both same-class and cross-class pairs");
  }
  return {intra / static_cast<double>(n_intra), inter / static_cast<double>(n_inter)};
}

}  // namespace emorec::text
