#pragma once

#include <span>

#include "emorec/nn/matrix.hpp"

namespace emorec::nn {

/// Weights of one forward LSTM layer mapping D inputs to H units. Gate blocks
/// are laid out along the 4H axis in the order input, forget, candidate,
/// output.
struct LstmWeights {
  const Matrix& input;      // D x 4H
  const Matrix& recurrent;  // H x 4H
  const Matrix& bias;       // 1 x 4H

  std::size_t input_dim() const { return input.rows(); }
  std::size_t units() const { return recurrent.rows(); }
};

/// Gradient buffers with the same shapes as the weights.
struct LstmGrads {
  Matrix& input;
  Matrix& recurrent;
  Matrix& bias;
};

/// Activations kept for backpropagation through time.
struct LstmCache {
  Matrix input;   // T x D
  Matrix gates;   // T x 4H, post-nonlinearity
  Matrix cells;   // T x H
  Matrix hidden;  // T x H
};

/// Runs the layer over all T steps from zero initial state; returns T x H.
Matrix lstm_sequence_forward(const Matrix& input, const LstmWeights& weights,
                             LstmCache* cache = nullptr);

/// Backpropagation through time. `upstream` is dLoss/dh_t for every step
/// (T x H). Accumulates into `grads` (same shapes as `weights`) and returns
/// dLoss/dinput (T x D).
Matrix lstm_sequence_backward(const LstmCache& cache, const LstmWeights& weights,
                              const Matrix& upstream, const LstmGrads& grads);

}  // namespace emorec::nn
