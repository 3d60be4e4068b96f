#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "emorec/nn/matrix.hpp"
#include "emorec/nn/rng.hpp"

// Stateless forward/backward kernels. Backward functions accumulate (+=)
// parameter gradients into caller-owned buffers and return the gradient with
// respect to their input.
namespace emorec::nn {

// ---- embedding ----------------------------------------------------------

/// Gathers rows of `table` (|V| x E) for each index; returns T x E.
Matrix embedding_forward(const Matrix& table, std::span<const int> indices);
void embedding_backward(std::span<const int> indices, const Matrix& upstream, Matrix& table_grad);

// ---- 1-D convolution ----------------------------------------------------
//
// Weights for kernel size k, input width E and F filters are stored as a
// (k*E) x F matrix: row i*E + e holds weights[i][e][:].

Matrix conv1d_forward(const Matrix& input, const Matrix& weights, std::span<const double> bias,
                      std::size_t kernel_size);

Matrix conv1d_backward(const Matrix& input, const Matrix& weights, std::size_t kernel_size,
                       const Matrix& upstream, Matrix& weight_grad, std::span<double> bias_grad);

/// Gradients returned by value, for callers that do not accumulate.
struct Conv1dGrads {
  Matrix input_grad;
  Matrix weight_grad;
  Vector bias_grad;
};
Conv1dGrads conv1d_backward(const Matrix& input, const Matrix& weights, std::size_t kernel_size,
                            const Matrix& upstream);

// ---- pooling ------------------------------------------------------------

Vector global_mean_pool_forward(const Matrix& input);
Matrix global_mean_pool_backward(std::size_t steps, std::span<const double> upstream);

/// Mean over rows [0, count); rows at or after `count` receive no gradient.
Vector masked_mean_pool_forward(const Matrix& input, std::size_t count);
Matrix masked_mean_pool_backward(std::size_t steps, std::size_t count,
                                 std::span<const double> upstream);

// ---- dense --------------------------------------------------------------

enum class Activation { linear, relu, tanh };

/// out = activation(W * input + b) with W stored out x in.
Vector dense_forward(std::span<const double> input, const Matrix& weights,
                     std::span<const double> bias, Activation activation);

/// `output` is the post-activation forward result.
Vector dense_backward(std::span<const double> input, const Matrix& weights,
                      std::span<const double> output, Activation activation,
                      std::span<const double> upstream, Matrix& weight_grad,
                      std::span<double> bias_grad);

void relu_inplace(Matrix& m);
/// Zeroes upstream entries where the relu output was not positive.
void relu_backward_inplace(const Matrix& output, Matrix& upstream);

// ---- dropout ------------------------------------------------------------

enum class Mode { train, eval };

/// Inverted dropout. Returns the output; `mask` receives the per-unit scale
/// (0 or 1/(1-p)) so backward is upstream * mask.
Vector dropout(std::span<const double> input, double drop_prob, Mode mode, Rng& rng,
               Vector* mask = nullptr);

// ---- softmax cross-entropy ----------------------------------------------

Vector softmax(std::span<const double> logits);

struct SoftmaxCrossEntropy {
  double loss;
  Vector probs;
  Vector grad;  // d loss / d logits
};

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t true_class);

std::size_t argmax(std::span<const double> values);

}  // namespace emorec::nn
