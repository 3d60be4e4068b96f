#include "emorec/text/mcnn.hpp"

#include <algorithm>
#include <string>

#include "emorec/error.hpp"
#include "emorec/text/tokenizer.hpp"

namespace emorec::text {

std::vector<std::size_t> kernel_schedule(std::string_view preset) {
  if (preset == "iemocap") return {1, 4, 7, 11};
  if (preset == "callcenter") return {1, 2, 3};
  throw ConfigError("unknown kernel preset '" + std::string(preset) + "'");
}

std::vector<std::size_t> kernel_schedule(std::vector<std::size_t> explicit_sizes) {
  if (explicit_sizes.empty()) throw ConfigError("kernel size list is empty");
  for (std::size_t i = 0; i < explicit_sizes.size(); ++i) {
    if (explicit_sizes[i] == 0) throw ConfigError("kernel sizes must be positive");
    if (i > 0 && explicit_sizes[i] <= explicit_sizes[i - 1]) {
      throw ConfigError("kernel sizes must be strictly increasing");
    }
  }
  return explicit_sizes;
}

std::size_t McnnConfig::max_kernel() const {
  return kernel_sizes.empty() ? 0 : *std::ranges::max_element(kernel_sizes);
}

void McnnConfig::validate() const {
  kernel_schedule(kernel_sizes);
  if (embed_dim == 0 || filters_per_module == 0) {
    throw ConfigError("embedding dimension and filters per module must be positive");
  }
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (!(lambda >= 0.0)) throw ConfigError("verification weight lambda must be >= 0");
}

McnnConfig McnnConfig::preset(std::string_view name, std::size_t num_classes) {
  McnnConfig config;
  config.kernel_sizes = kernel_schedule(name);
  config.num_classes = num_classes;
  config.lambda = name == "callcenter" ? 0.15 : 0.10;
  return config;
}

PaddedTokens pad_tokens(std::vector<int> indices, std::size_t min_length) {
  PaddedTokens out;
  out.length = indices.size();
  out.indices = std::move(indices);
  if (out.indices.size() < min_length) out.indices.resize(min_length, Vocabulary::kPad);
  return out;
}

McnnModel::McnnModel(McnnConfig config, std::size_t vocab_size, nn::Rng& rng)
    : config_(std::move(config)) {
  config_.validate();
  if (vocab_size < 2) throw ConfigError("vocabulary must include the reserved entries");
  const std::size_t e = config_.embed_dim;
  const std::size_t f = config_.filters_per_module;

  embedding = Parameter(vocab_size, e);
  nn::init_uniform(embedding.value, 0.05, rng);
  clamp_padding_row();

  for (std::size_t k : config_.kernel_sizes) {
    Parameter w(k * e, f);
    nn::init_glorot(w.value, k * e, f, rng);
    conv_weights.push_back(std::move(w));
    conv_biases.emplace_back(1, f);
  }
  output_weights = Parameter(config_.num_classes, config_.embedding_size());
  nn::init_glorot(output_weights.value, config_.embedding_size(), config_.num_classes, rng);
  output_bias = Parameter(1, config_.num_classes);
}

void McnnModel::set_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("verification weight lambda must be >= 0");
  config_.lambda = lambda;
}

std::vector<Parameter*> McnnModel::parameters() {
  std::vector<Parameter*> out{&embedding};
  for (std::size_t m = 0; m < conv_weights.size(); ++m) {
    out.push_back(&conv_weights[m]);
    out.push_back(&conv_biases[m]);
  }
  out.push_back(&output_weights);
  out.push_back(&output_bias);
  return out;
}

std::vector<const Parameter*> McnnModel::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<McnnModel*>(this)->parameters()) out.push_back(p);
  return out;
}

void McnnModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

void McnnModel::clamp_padding_row() {
  std::ranges::fill(embedding.value.row(Vocabulary::kPad), 0.0);
  std::ranges::fill(embedding.grad.row(Vocabulary::kPad), 0.0);
}

std::size_t pooled_window_count(std::size_t length, std::size_t kernel) {
  if (length == 0) return 0;
  return length >= kernel ? length - kernel + 1 : 1;
}

McnnForward mcnn_forward(const McnnModel& model, const PaddedTokens& tokens) {
  const McnnConfig& config = model.config();
  if (tokens.indices.size() < config.max_kernel()) {
    throw PreconditionError("token sequence of length " + std::to_string(tokens.indices.size()) +
                            " is not padded to the largest kernel " +
                            std::to_string(config.max_kernel()));
  }
  McnnForward fw;
  fw.tokens = tokens;
  fw.embedded = nn::embedding_forward(model.embedding.value, tokens.indices);
  fw.embedding.assign(config.embedding_size(), 0.0);

  if (tokens.all_padding()) {
    // Empty transcript: zero embedding, uniform posteriors.
    fw.logits.assign(config.num_classes, 0.0);
    fw.posteriors = nn::softmax(fw.logits);
    return fw;
  }

  const std::size_t f = config.filters_per_module;
  for (std::size_t m = 0; m < config.num_modules(); ++m) {
    const std::size_t k = config.kernel_sizes[m];
    Matrix act = nn::conv1d_forward(fw.embedded, model.conv_weights[m].value,
                                    model.conv_biases[m].value.row(0), k);
    nn::relu_inplace(act);
    const std::size_t count = pooled_window_count(tokens.length, k);
    const Vector pooled = nn::masked_mean_pool_forward(act, count);
    std::ranges::copy(pooled, fw.embedding.begin() + static_cast<std::ptrdiff_t>(m * f));
    fw.activations.push_back(std::move(act));
    fw.pool_counts.push_back(count);
  }
  fw.logits = nn::dense_forward(fw.embedding, model.output_weights.value,
                                model.output_bias.value.row(0), nn::Activation::linear);
  fw.posteriors = nn::softmax(fw.logits);
  return fw;
}

void mcnn_backward(McnnModel& model, const McnnForward& forward,
                   std::span<const double> embedding_grad, std::span<const double> logits_grad) {
  const McnnConfig& config = model.config();
  if (embedding_grad.size() != config.embedding_size() ||
      logits_grad.size() != config.num_classes) {
    throw ShapeError("mcnn backward upstream sizes do not match the model");
  }
  if (forward.tokens.all_padding()) return;

  Vector d_embedding = nn::dense_backward(
      forward.embedding, model.output_weights.value, forward.logits, nn::Activation::linear,
      logits_grad, model.output_weights.grad, model.output_bias.grad.row(0));
  for (std::size_t i = 0; i < d_embedding.size(); ++i) d_embedding[i] += embedding_grad[i];

  const std::size_t f = config.filters_per_module;
  Matrix d_embedded(forward.embedded.rows(), forward.embedded.cols());
  for (std::size_t m = 0; m < config.num_modules(); ++m) {
    const Matrix& act = forward.activations[m];
    std::span<const double> d_pooled(d_embedding.data() + m * f, f);
    Matrix d_act = nn::masked_mean_pool_backward(act.rows(), forward.pool_counts[m], d_pooled);
    nn::relu_backward_inplace(act, d_act);
    d_embedded += nn::conv1d_backward(forward.embedded, model.conv_weights[m].value,
                                      config.kernel_sizes[m], d_act, model.conv_weights[m].grad,
                                      model.conv_biases[m].grad.row(0));
  }
  nn::embedding_backward(forward.tokens.indices, d_embedded, model.embedding.grad);
  std::ranges::fill(model.embedding.grad.row(Vocabulary::kPad), 0.0);
}

}  // namespace emorec::text
