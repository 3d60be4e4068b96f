#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "emorec/nn/layers.hpp"
#include "emorec/nn/lstm.hpp"
#include "emorec/nn/parameter.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::acoustic {

using nn::Matrix;
using nn::Parameter;
using nn::Vector;

struct LstmConfig {
  std::size_t input_dim = 88;
  std::size_t num_lstm_layers = 2;
  std::size_t units_per_layer = 256;
  std::size_t dense_units = 256;
  std::size_t num_classes = 4;
  double dropout_prob = 0.5;
  std::size_t batch_size = 40;

  void validate() const;
  /// "iemocap": 2 x 256 LSTM, dense 256, dropout 0.5, batch 40.
  /// "callcenter": 1 x 96 LSTM, dense 96, dropout 0.5, batch 40.
  static LstmConfig preset(std::string_view name, std::size_t num_classes,
                           std::size_t input_dim = 88);
};

struct LstmLayer {
  Parameter input;      // D x 4H
  Parameter recurrent;  // H x 4H
  Parameter bias;       // 1 x 4H

  nn::LstmWeights weights() const { return {input.value, recurrent.value, bias.value}; }
  nn::LstmGrads grads() { return {input.grad, recurrent.grad, bias.grad}; }
};

/// Stacked forward LSTMs -> global mean pool over time -> dense relu with
/// dropout -> dense -> softmax.
class AcousticModel {
 public:
  AcousticModel() = default;
  /// LSTM weights uniform in +-0.05 with forget-gate bias 1; dense layers
  /// Glorot-uniform with zero bias.
  AcousticModel(LstmConfig config, nn::Rng& rng);

  const LstmConfig& config() const noexcept { return config_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();

  std::vector<LstmLayer> layers;
  Parameter hidden_weights;  // dense_units x H
  Parameter hidden_bias;     // 1 x dense_units
  Parameter output_weights;  // K x dense_units
  Parameter output_bias;     // 1 x K

 private:
  LstmConfig config_;
};

struct AcousticForward {
  Vector pooled;
  Vector logits;
  Vector posteriors;

  std::vector<nn::LstmCache> caches;
  Vector hidden;        // relu output of the first dense layer
  Vector dropout_mask;  // per-unit scale applied to `hidden`
  Vector dropped;       // hidden after dropout
};

/// `rng` is only drawn from in train mode.
AcousticForward acoustic_forward(const AcousticModel& model, const Matrix& frames, nn::Mode mode,
                                 nn::Rng& rng);

/// Accumulates parameter gradients given dLoss/dlogits.
void acoustic_backward(AcousticModel& model, const AcousticForward& forward,
                       std::span<const double> logits_grad);

/// Diagnostic that pools raw frames directly, bypassing the recurrent stack.
Vector pool_frames(const Matrix& frames);

}  // namespace emorec::acoustic
