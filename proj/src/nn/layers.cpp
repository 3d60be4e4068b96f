#include "emorec/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emorec/error.hpp"

namespace emorec::nn {

Matrix embedding_forward(const Matrix& table, std::span<const int> indices) {
  Matrix out(indices.size(), table.cols());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const int idx = indices[t];
    if (idx < 0 || static_cast<std::size_t>(idx) >= table.rows()) {
      throw IndexError("token index " + std::to_string(idx) + " outside vocabulary of " +
                       std::to_string(table.rows()));
    }
    std::ranges::copy(table.row(static_cast<std::size_t>(idx)), out.row(t).begin());
  }
  return out;
}

void embedding_backward(std::span<const int> indices, const Matrix& upstream, Matrix& table_grad) {
  if (upstream.rows() != indices.size() || upstream.cols() != table_grad.cols()) {
    throw ShapeError("embedding upstream " + shape_string(upstream));
  }
  for (std::size_t t = 0; t < indices.size(); ++t) {
    auto dst = table_grad.row(static_cast<std::size_t>(indices[t]));
    auto src = upstream.row(t);
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += src[e];
  }
}

namespace {

void check_conv_shapes(const Matrix& input, const Matrix& weights, std::size_t bias_len,
                       std::size_t kernel_size) {
  if (kernel_size == 0) throw PreconditionError("conv1d kernel size must be >= 1");
  if (input.rows() < kernel_size) {
    throw PreconditionError("conv1d input length " + std::to_string(input.rows()) +
                            " shorter than kernel " + std::to_string(kernel_size));
  }
  if (weights.rows() != kernel_size * input.cols() || weights.cols() == 0) {
    throw ShapeError("conv1d weights " + shape_string(weights) + " for kernel " +
                     std::to_string(kernel_size) + " and input width " +
                     std::to_string(input.cols()));
  }
  if (bias_len != weights.cols()) throw ShapeError("conv1d bias length mismatch");
}

}  // namespace

Matrix conv1d_forward(const Matrix& input, const Matrix& weights, std::span<const double> bias,
                      std::size_t kernel_size) {
  check_conv_shapes(input, weights, bias.size(), kernel_size);
  const std::size_t width = input.cols();
  const std::size_t filters = weights.cols();
  const std::size_t steps = input.rows() - kernel_size + 1;
  Matrix out(steps, filters);
  for (std::size_t t = 0; t < steps; ++t) {
    auto dst = out.row(t);
    std::ranges::copy(bias, dst.begin());
    // Window rows t..t+k-1 are contiguous, so the window is one flat span of
    // k*E values aligned with the weight rows.
    const double* window = input.data().data() + t * width;
    for (std::size_t j = 0; j < kernel_size * width; ++j) {
      const double x = window[j];
      if (x == 0.0) continue;
      const auto w = weights.row(j);
      for (std::size_t f = 0; f < filters; ++f) dst[f] += x * w[f];
    }
  }
  return out;
}

Matrix conv1d_backward(const Matrix& input, const Matrix& weights, std::size_t kernel_size,
                       const Matrix& upstream, Matrix& weight_grad, std::span<double> bias_grad) {
  check_conv_shapes(input, weights, bias_grad.size(), kernel_size);
  require_same_shape(weights, weight_grad, "conv1d weight gradient");
  const std::size_t width = input.cols();
  const std::size_t filters = weights.cols();
  const std::size_t steps = input.rows() - kernel_size + 1;
  if (upstream.rows() != steps || upstream.cols() != filters) {
    throw ShapeError("conv1d upstream " + shape_string(upstream) + " expected " +
                     std::to_string(steps) + "x" + std::to_string(filters));
  }
  Matrix input_grad(input.rows(), width);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto up = upstream.row(t);
    for (std::size_t f = 0; f < filters; ++f) bias_grad[f] += up[f];
    const double* window = input.data().data() + t * width;
    double* window_grad = input_grad.data().data() + t * width;
    for (std::size_t j = 0; j < kernel_size * width; ++j) {
      const auto w = weights.row(j);
      auto wg = weight_grad.row(j);
      const double x = window[j];
      double acc = 0.0;
      for (std::size_t f = 0; f < filters; ++f) {
        wg[f] += x * up[f];
        acc += w[f] * up[f];
      }
      window_grad[j] += acc;
    }
  }
  return input_grad;
}

Conv1dGrads conv1d_backward(const Matrix& input, const Matrix& weights, std::size_t kernel_size,
                            const Matrix& upstream) {
  Conv1dGrads grads{{}, Matrix(weights.rows(), weights.cols()), Vector(weights.cols(), 0.0)};
  grads.input_grad =
      conv1d_backward(input, weights, kernel_size, upstream, grads.weight_grad, grads.bias_grad);
  return grads;
}

Vector global_mean_pool_forward(const Matrix& input) {
  if (input.rows() == 0) throw EmptySequenceError("global mean pool over empty sequence");
  return masked_mean_pool_forward(input, input.rows());
}

Matrix global_mean_pool_backward(std::size_t steps, std::span<const double> upstream) {
  if (steps == 0) throw EmptySequenceError("global mean pool over empty sequence");
  return masked_mean_pool_backward(steps, steps, upstream);
}

Vector masked_mean_pool_forward(const Matrix& input, std::size_t count) {
  if (count == 0) throw EmptySequenceError("mean pool over zero rows");
  if (count > input.rows()) throw ShapeError("pool count exceeds sequence length");
  // Running mean: a sequence of identical rows pools to that row exactly.
  Vector out(input.row(0).begin(), input.row(0).end());
  for (std::size_t t = 1; t < count; ++t) {
    const auto r = input.row(t);
    const double inv = 1.0 / static_cast<double>(t + 1);
    for (std::size_t h = 0; h < out.size(); ++h) out[h] += (r[h] - out[h]) * inv;
  }
  return out;
}

Matrix masked_mean_pool_backward(std::size_t steps, std::size_t count,
                                 std::span<const double> upstream) {
  if (count == 0) throw EmptySequenceError("mean pool over zero rows");
  if (count > steps) throw ShapeError("pool count exceeds sequence length");
  Matrix grad(steps, upstream.size());
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t t = 0; t < count; ++t) {
    auto r = grad.row(t);
    for (std::size_t h = 0; h < upstream.size(); ++h) r[h] = upstream[h] * scale;
  }
  return grad;
}

namespace {

double activate(double x, Activation a) {
  switch (a) {
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
    case Activation::tanh:
      return std::tanh(x);
    case Activation::linear:
      break;
  }
  return x;
}

double activation_slope(double output, Activation a) {
  switch (a) {
    case Activation::relu:
      return output > 0.0 ? 1.0 : 0.0;
    case Activation::tanh:
      return 1.0 - output * output;
    case Activation::linear:
      break;
  }
  return 1.0;
}

}  // namespace

Vector dense_forward(std::span<const double> input, const Matrix& weights,
                     std::span<const double> bias, Activation activation) {
  if (weights.cols() != input.size() || weights.rows() != bias.size()) {
    throw ShapeError("dense weights " + shape_string(weights) + " with input " +
                     std::to_string(input.size()) + " and bias " + std::to_string(bias.size()));
  }
  Vector out(weights.rows());
  for (std::size_t o = 0; o < out.size(); ++o) {
    out[o] = activate(bias[o] + dot(weights.row(o), input), activation);
  }
  return out;
}

Vector dense_backward(std::span<const double> input, const Matrix& weights,
                      std::span<const double> output, Activation activation,
                      std::span<const double> upstream, Matrix& weight_grad,
                      std::span<double> bias_grad) {
  if (weights.cols() != input.size() || weights.rows() != output.size() ||
      upstream.size() != output.size() || bias_grad.size() != output.size()) {
    throw ShapeError("dense backward shape mismatch");
  }
  require_same_shape(weights, weight_grad, "dense weight gradient");
  Vector input_grad(input.size(), 0.0);
  for (std::size_t o = 0; o < output.size(); ++o) {
    const double delta = upstream[o] * activation_slope(output[o], activation);
    if (delta == 0.0) continue;
    bias_grad[o] += delta;
    const auto w = weights.row(o);
    auto wg = weight_grad.row(o);
    for (std::size_t i = 0; i < input.size(); ++i) {
      wg[i] += delta * input[i];
      input_grad[i] += delta * w[i];
    }
  }
  return input_grad;
}

void relu_inplace(Matrix& m) {
  for (double& x : m.data()) x = x > 0.0 ? x : 0.0;
}

void relu_backward_inplace(const Matrix& output, Matrix& upstream) {
  require_same_shape(output, upstream, "relu backward");
  auto out = output.data();
  auto up = upstream.data();
  for (std::size_t i = 0; i < up.size(); ++i) {
    if (!(out[i] > 0.0)) up[i] = 0.0;
  }
}

Vector dropout(std::span<const double> input, double drop_prob, Mode mode, Rng& rng,
               Vector* mask) {
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
  Vector out(input.begin(), input.end());
  Vector scale(input.size(), 1.0);
  if (mode == Mode::train && drop_prob > 0.0) {
    const double keep_scale = 1.0 / (1.0 - drop_prob);
    for (std::size_t i = 0; i < out.size(); ++i) {
      scale[i] = rng.bernoulli(drop_prob) ? 0.0 : keep_scale;
      out[i] *= scale[i];
    }
  }
  if (mask != nullptr) *mask = std::move(scale);
  return out;
}

Vector softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of empty vector");
  const double peak = *std::ranges::max_element(logits);
  Vector probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

SoftmaxCrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t true_class) {
  if (logits.size() < 2) throw ShapeError("softmax cross-entropy needs at least two classes");
  if (true_class >= logits.size()) {
    throw IndexError("class " + std::to_string(true_class) + " out of range for " +
                     std::to_string(logits.size()) + " logits");
  }
  const double peak = *std::ranges::max_element(logits);
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  const double log_total = std::log(total);

  SoftmaxCrossEntropy result{0.0, softmax(logits), {}};
  // -log p_y computed in log space so it stays finite for extreme logits.
  result.loss = log_total - (logits[true_class] - peak);
  result.grad = result.probs;
  result.grad[true_class] -= 1.0;
  return result;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace emorec::nn
