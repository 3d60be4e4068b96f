#include "emorec/acoustic/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emorec/error.hpp"

namespace emorec::acoustic {

void LstmConfig::validate() const {
  if (input_dim == 0 || num_lstm_layers == 0 || units_per_layer == 0 || dense_units == 0 ||
      batch_size == 0) {
    throw ConfigError("LSTM configuration counts must be positive");
  }
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1)");
  }
}

LstmConfig LstmConfig::preset(std::string_view name, std::size_t num_classes,
                              std::size_t input_dim) {
  LstmConfig config;
  config.input_dim = input_dim;
  config.num_classes = num_classes;
  if (name == "iemocap") {
    config.num_lstm_layers = 2;
    config.units_per_layer = 256;
    config.dense_units = 256;
  } else if (name == "callcenter") {
    // Dense width for this preset is not given; it mirrors the LSTM width.
    config.num_lstm_layers = 1;
    config.units_per_layer = 96;
    config.dense_units = 96;
  } else {
    throw ConfigError("unknown LSTM preset '" + std::string(name) + "'");
  }
  config.dropout_prob = 0.5;
  config.batch_size = 40;
  return config;
}

AcousticModel::AcousticModel(LstmConfig config, nn::Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t h = config_.units_per_layer;
  std::size_t in = config_.input_dim;
  for (std::size_t l = 0; l < config_.num_lstm_layers; ++l) {
    LstmLayer layer{Parameter(in, 4 * h), Parameter(h, 4 * h), Parameter(1, 4 * h)};
    nn::init_uniform(layer.input.value, 0.05, rng);
    nn::init_uniform(layer.recurrent.value, 0.05, rng);
    auto bias = layer.bias.value.row(0);
    std::fill(bias.begin() + static_cast<std::ptrdiff_t>(h),
              bias.begin() + static_cast<std::ptrdiff_t>(2 * h), 1.0);
    layers.push_back(std::move(layer));
    in = h;
  }
  hidden_weights = Parameter(config_.dense_units, h);
  nn::init_glorot(hidden_weights.value, h, config_.dense_units, rng);
  hidden_bias = Parameter(1, config_.dense_units);
  output_weights = Parameter(config_.num_classes, config_.dense_units);
  nn::init_glorot(output_weights.value, config_.dense_units, config_.num_classes, rng);
  output_bias = Parameter(1, config_.num_classes);
}

std::vector<Parameter*> AcousticModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers) {
    out.push_back(&layer.input);
    out.push_back(&layer.recurrent);
    out.push_back(&layer.bias);
  }
  out.push_back(&hidden_weights);
  out.push_back(&hidden_bias);
  out.push_back(&output_weights);
  out.push_back(&output_bias);
  return out;
}

std::vector<const Parameter*> AcousticModel::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<AcousticModel*>(this)->parameters()) out.push_back(p);
  return out;
}

void AcousticModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

AcousticForward acoustic_forward(const AcousticModel& model, const Matrix& frames, nn::Mode mode,
                                 nn::Rng& rng) {
  const LstmConfig& config = model.config();
  if (frames.rows() == 0) throw EmptySequenceError("acoustic forward over zero frames");
  if (frames.cols() != config.input_dim) {
    throw ShapeError("frames have " + std::to_string(frames.cols()) + " dims, model expects " +
                     std::to_string(config.input_dim));
  }
  AcousticForward fw;
  fw.caches.resize(model.layers.size());
  Matrix sequence = frames;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    sequence = nn::lstm_sequence_forward(sequence, model.layers[l].weights(), &fw.caches[l]);
  }
  fw.pooled = nn::global_mean_pool_forward(sequence);
  fw.hidden = nn::dense_forward(fw.pooled, model.hidden_weights.value,
                                model.hidden_bias.value.row(0), nn::Activation::relu);
  fw.dropped = nn::dropout(fw.hidden, config.dropout_prob, mode, rng, &fw.dropout_mask);
  fw.logits = nn::dense_forward(fw.dropped, model.output_weights.value,
                                model.output_bias.value.row(0), nn::Activation::linear);
  fw.posteriors = nn::softmax(fw.logits);
  return fw;
}

void acoustic_backward(AcousticModel& model, const AcousticForward& forward,
                       std::span<const double> logits_grad) {
  Vector d_dropped = nn::dense_backward(forward.dropped, model.output_weights.value,
                                        forward.logits, nn::Activation::linear, logits_grad,
                                        model.output_weights.grad, model.output_bias.grad.row(0));
  for (std::size_t i = 0; i < d_dropped.size(); ++i) d_dropped[i] *= forward.dropout_mask[i];
  const Vector d_pooled = nn::dense_backward(forward.pooled, model.hidden_weights.value,
                                             forward.hidden, nn::Activation::relu, d_dropped,
                                             model.hidden_weights.grad,
                                             model.hidden_bias.grad.row(0));
  const std::size_t steps = forward.caches.back().hidden.rows();
  Matrix upstream = nn::global_mean_pool_backward(steps, d_pooled);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    LstmLayer& layer = model.layers[l];
    upstream = nn::lstm_sequence_backward(forward.caches[l], layer.weights(), upstream,
                                          layer.grads());
  }
}

namespace {

// Correctly rounded sum (Shewchuk's partials). Repeating every term doubles
// the exact sum, so the rounded mean is unchanged under frame duplication.
double exact_sum(std::span<const double> values) {
  std::vector<double> partials;
  for (double x : values) {
    std::size_t used = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[used++] = lo;
      x = hi;
    }
    partials.resize(used);
    partials.push_back(x);
  }
  // Sum partials from the top, with the half-way correction used by fsum.
  if (partials.empty()) return 0.0;
  std::size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

}  // namespace

Vector pool_frames(const Matrix& frames) {
  if (frames.rows() == 0) throw EmptySequenceError("pooling an empty frame sequence");
  Vector out(frames.cols());
  std::vector<double> column(frames.rows());
  for (std::size_t d = 0; d < frames.cols(); ++d) {
    for (std::size_t t = 0; t < frames.rows(); ++t) column[t] = frames(t, d);
    out[d] = exact_sum(column) / static_cast<double>(frames.rows());
  }
  return out;
}

}  // namespace emorec::acoustic
