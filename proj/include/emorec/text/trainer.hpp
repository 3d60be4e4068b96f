#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emorec/data/corpus.hpp"
#include "emorec/data/folds.hpp"
#include "emorec/nn/training.hpp"
#include "emorec/text/mcnn.hpp"
#include "emorec/text/tokenizer.hpp"

namespace emorec::text {

struct TextExample {
  std::vector<int> indices;  // unpadded
  std::size_t label = 0;
};

std::vector<TextExample> encode_examples(const data::Corpus& corpus,
                                         std::span<const std::size_t> positions,
                                         const Vocabulary& vocab);

/// Vocabulary from the given corpus positions only.
Vocabulary build_vocabulary(const data::Corpus& corpus, std::span<const std::size_t> positions);

McnnForward mcnn_predict(const McnnModel& model, const TextExample& example);

struct TextTrainResult {
  McnnModel model;
  std::vector<nn::EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_selection = -1.0;
};

/// Mini-batch Adam on the combined objective with lambda taken from the
/// model config. Aborts with NumericError on a non-finite loss.
TextTrainResult train_text_model(McnnModel model, std::span<const TextExample> train,
                                 std::span<const TextExample> validation,
                                 const nn::TrainConfig& config);

struct LambdaTrial {
  double lambda = 0.0;
  double selection = -1.0;
};

struct LambdaSearch {
  double best_lambda = 0.0;
  std::vector<LambdaTrial> trials;
  TextTrainResult best;
};

inline const std::vector<double> kDefaultLambdaGrid{0.05, 0.10, 0.15};

/// Trains one model per lambda from the same initialization and keeps the
/// one with the best validation score (first wins ties).
LambdaSearch select_lambda(const McnnModel& initial, std::span<const TextExample> train,
                           std::span<const TextExample> validation, const nn::TrainConfig& config,
                           const std::vector<double>& grid = kDefaultLambdaGrid);

/// Arithmetic kernel list 1, 1+step, ... with `count` entries.
std::vector<std::size_t> arithmetic_kernels(std::size_t count, std::size_t step);

struct SweepRow {
  std::size_t num_modules = 0;
  std::vector<std::size_t> kernel_sizes;
  double ua = 0.0;
  double wa = 0.0;
};

/// Trains one model per module count N = 1..max_modules with lambda = 0 over
/// the first `rounds` rounds of the plan and reports pooled test metrics.
std::vector<SweepRow> sweep_modules(const data::Corpus& corpus, const data::FoldPlan& plan,
                                    std::size_t max_modules, McnnConfig base,
                                    std::size_t kernel_step, std::size_t rounds,
                                    const nn::TrainConfig& config);

/// Mean intra-class and inter-class cosine similarity over all unordered
/// pairs of embeddings.
struct EmbeddingGeometry {
  double intra = 0.0;
  double inter = 0.0;
  double gap() const { return intra - inter; }
};

EmbeddingGeometry embedding_geometry(const McnnModel& model, std::span<const TextExample> examples);

}  // namespace emorec::text
