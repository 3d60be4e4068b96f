#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "emorec/nn/layers.hpp"
#include "emorec/nn/parameter.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::text {

using nn::Matrix;
using nn::Parameter;
using nn::Vector;

/// Kernel sizes for a named preset: "iemocap" -> {1,4,7,11},
/// "callcenter" -> {1,2,3}.
std::vector<std::size_t> kernel_schedule(std::string_view preset);
/// Validates an explicit list (positive, strictly increasing) and returns it.
std::vector<std::size_t> kernel_schedule(std::vector<std::size_t> explicit_sizes);

struct McnnConfig {
  std::vector<std::size_t> kernel_sizes{1, 4, 7, 11};
  std::size_t embed_dim = 50;
  std::size_t filters_per_module = 64;
  std::size_t num_classes = 4;
  double lambda = 0.0;

  std::size_t num_modules() const noexcept { return kernel_sizes.size(); }
  std::size_t max_kernel() const;
  std::size_t embedding_size() const noexcept { return num_modules() * filters_per_module; }

  void validate() const;
  /// "iemocap" (lambda 0.1, mid-range of the tuned interval) or
  /// "callcenter" (lambda 0.15).
  static McnnConfig preset(std::string_view name, std::size_t num_classes);
};

/// Token indices right-padded with Vocabulary::kPad; `length` is the count of
/// real tokens before padding.
struct PaddedTokens {
  std::vector<int> indices;
  std::size_t length = 0;

  bool all_padding() const noexcept { return length == 0; }
};

PaddedTokens pad_tokens(std::vector<int> indices, std::size_t min_length);

/// Multi-resolution CNN: one conv (relu) + masked mean pool per kernel size,
/// concatenated into the utterance embedding, then a dense softmax head.
class McnnModel {
 public:
  McnnModel() = default;
  McnnModel(McnnConfig config, std::size_t vocab_size, nn::Rng& rng);

  const McnnConfig& config() const noexcept { return config_; }
  std::size_t vocab_size() const noexcept { return embedding.value.rows(); }
  void set_lambda(double lambda);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
  /// Keeps the padding row of the embedding table at zero (value and grad).
  void clamp_padding_row();

  Parameter embedding;                 // |V| x E
  std::vector<Parameter> conv_weights;  // per module: (k*E) x F
  std::vector<Parameter> conv_biases;   // per module: 1 x F
  Parameter output_weights;             // K x (N*F)
  Parameter output_bias;                // 1 x K

 private:
  McnnConfig config_;
};

struct McnnForward {
  Vector embedding;
  Vector logits;
  Vector posteriors;

  // Backward cache.
  PaddedTokens tokens;
  Matrix embedded;
  std::vector<Matrix> activations;     // relu(conv) per module
  std::vector<std::size_t> pool_counts;  // windows averaged per module
};

/// Windows of a kernel of size `kernel` that contribute to the pooled
/// output for an utterance of `length` real tokens: those lying entirely on
/// real tokens, or the first window alone when the utterance is shorter than
/// the kernel. Zero for an all-padding utterance.
std::size_t pooled_window_count(std::size_t length, std::size_t kernel);

McnnForward mcnn_forward(const McnnModel& model, const PaddedTokens& tokens);

/// Accumulates parameter gradients for upstream gradients on the embedding
/// and on the logits.
void mcnn_backward(McnnModel& model, const McnnForward& forward,
                   std::span<const double> embedding_grad, std::span<const double> logits_grad);

}  // namespace emorec::text
