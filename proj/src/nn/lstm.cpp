#include "emorec/nn/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emorec/error.hpp"

namespace emorec::nn {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_weights(const LstmWeights& w) {
  const std::size_t h = w.units();
  if (h == 0 || w.recurrent.cols() != 4 * h || w.input.cols() != 4 * h || w.bias.rows() != 1 ||
      w.bias.cols() != 4 * h) {
    throw ShapeError("inconsistent LSTM weight shapes: input " + shape_string(w.input) +
                     ", recurrent " + shape_string(w.recurrent) + ", bias " +
                     shape_string(w.bias));
  }
}

}  // namespace

Matrix lstm_sequence_forward(const Matrix& input, const LstmWeights& weights, LstmCache* cache) {
  check_weights(weights);
  if (input.rows() == 0) throw EmptySequenceError("LSTM over empty sequence");
  if (input.cols() != weights.input_dim()) {
    throw ShapeError("LSTM input width " + std::to_string(input.cols()) + " expected " +
                     std::to_string(weights.input_dim()));
  }
  const std::size_t steps = input.rows();
  const std::size_t h = weights.units();
  const std::size_t g4 = 4 * h;

  Matrix gates(steps, g4);
  Matrix cells(steps, h);
  Matrix hidden(steps, h);
  Vector pre(g4);

  for (std::size_t t = 0; t < steps; ++t) {
    const auto b = weights.bias.row(0);
    std::ranges::copy(b, pre.begin());
    const auto x = input.row(t);
    for (std::size_t d = 0; d < x.size(); ++d) {
      if (x[d] == 0.0) continue;
      const auto w = weights.input.row(d);
      for (std::size_t j = 0; j < g4; ++j) pre[j] += x[d] * w[j];
    }
    if (t > 0) {
      const auto prev = hidden.row(t - 1);
      for (std::size_t u = 0; u < h; ++u) {
        const auto w = weights.recurrent.row(u);
        for (std::size_t j = 0; j < g4; ++j) pre[j] += prev[u] * w[j];
      }
    }
    auto gate = gates.row(t);
    auto cell = cells.row(t);
    auto out = hidden.row(t);
    for (std::size_t u = 0; u < h; ++u) {
      const double i_g = sigmoid(pre[u]);
      const double f_g = sigmoid(pre[h + u]);
      const double c_g = std::tanh(pre[2 * h + u]);
      const double o_g = sigmoid(pre[3 * h + u]);
      gate[u] = i_g;
      gate[h + u] = f_g;
      gate[2 * h + u] = c_g;
      gate[3 * h + u] = o_g;
      const double prev_cell = t > 0 ? cells(t - 1, u) : 0.0;
      cell[u] = f_g * prev_cell + i_g * c_g;
      out[u] = o_g * std::tanh(cell[u]);
    }
  }

  if (cache != nullptr) {
    cache->input = input;
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hidden = hidden;
  }
  return hidden;
}

Matrix lstm_sequence_backward(const LstmCache& cache, const LstmWeights& weights,
                              const Matrix& upstream, const LstmGrads& grads) {
  check_weights(weights);
  require_same_shape(weights.input, grads.input, "LSTM input weight gradient");
  require_same_shape(weights.recurrent, grads.recurrent, "LSTM recurrent weight gradient");
  require_same_shape(weights.bias, grads.bias, "LSTM bias gradient");
  require_same_shape(cache.hidden, upstream, "LSTM upstream gradient");

  const std::size_t steps = cache.input.rows();
  const std::size_t h = weights.units();
  const std::size_t g4 = 4 * h;

  Matrix input_grad(steps, cache.input.cols());
  Vector dh_next(h, 0.0);
  Vector dc_next(h, 0.0);
  Vector dpre(g4);

  for (std::size_t s = steps; s-- > 0;) {
    const auto gate = cache.gates.row(s);
    const auto cell = cache.cells.row(s);
    const auto up = upstream.row(s);
    for (std::size_t u = 0; u < h; ++u) {
      const double i_g = gate[u];
      const double f_g = gate[h + u];
      const double c_g = gate[2 * h + u];
      const double o_g = gate[3 * h + u];
      const double tanh_c = std::tanh(cell[u]);
      const double dh = up[u] + dh_next[u];
      const double dc = dc_next[u] + dh * o_g * (1.0 - tanh_c * tanh_c);
      const double prev_cell = s > 0 ? cache.cells(s - 1, u) : 0.0;
      dpre[u] = dc * c_g * i_g * (1.0 - i_g);
      dpre[h + u] = dc * prev_cell * f_g * (1.0 - f_g);
      dpre[2 * h + u] = dc * i_g * (1.0 - c_g * c_g);
      dpre[3 * h + u] = dh * tanh_c * o_g * (1.0 - o_g);
      dc_next[u] = dc * f_g;
    }

    auto bias_grad = grads.bias.row(0);
    for (std::size_t j = 0; j < g4; ++j) bias_grad[j] += dpre[j];

    const auto x = cache.input.row(s);
    auto dx = input_grad.row(s);
    for (std::size_t d = 0; d < x.size(); ++d) {
      const auto w = weights.input.row(d);
      auto wg = grads.input.row(d);
      double acc = 0.0;
      for (std::size_t j = 0; j < g4; ++j) {
        wg[j] += x[d] * dpre[j];
        acc += w[j] * dpre[j];
      }
      dx[d] = acc;
    }

    std::ranges::fill(dh_next, 0.0);
    if (s > 0) {
      const auto prev = cache.hidden.row(s - 1);
      for (std::size_t u = 0; u < h; ++u) {
        const auto w = weights.recurrent.row(u);
        auto wg = grads.recurrent.row(u);
        double acc = 0.0;
        for (std::size_t j = 0; j < g4; ++j) {
          wg[j] += prev[u] * dpre[j];
          acc += w[j] * dpre[j];
        }
        dh_next[u] = acc;
      }
    }
  }
  return input_grad;
}

}  // namespace emorec::nn
