#pragma once

#include <cstdint>
#include <string>

#include "emorec/nn/matrix.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::nn {

/// Trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::size_t rows, std::size_t cols)
      : value(rows, cols), grad(rows, cols), m(rows, cols), v(rows, cols) {}
  explicit Parameter(Matrix initial)
      : value(std::move(initial)),
        grad(value.rows(), value.cols()),
        m(value.rows(), value.cols()),
        v(value.rows(), value.cols()) {}

  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;
  std::uint64_t step_count = 0;

  void zero_grad() { grad.set_zero(); }
};

void init_uniform(Matrix& m, double limit, Rng& rng);
/// Glorot/Xavier uniform with the given fan-in and fan-out.
void init_glorot(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam step. Clears the gradient afterward.
void adam_update(Parameter& param, const AdamConfig& config = {});

}  // namespace emorec::nn
