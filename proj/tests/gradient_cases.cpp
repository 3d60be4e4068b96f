#include "gradient_cases.hpp"

#include <algorithm>

#include "emorec/acoustic/model.hpp"
#include "emorec/nn/layers.hpp"
#include "emorec/nn/lstm.hpp"
#include "emorec/nn/parameter.hpp"
#include "emorec/nn/rng.hpp"
#include "emorec/text/mcnn.hpp"
#include "emorec/text/objective.hpp"

namespace emorec::testing {
namespace {

using nn::GradTarget;
using nn::Matrix;
using nn::Rng;
using nn::Vector;

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

double weighted_sum(const Matrix& m, const Matrix& weights) {
  return nn::dot(m.data(), weights.data());
}

nn::GradCheckReport embedding_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t vocab = draw(rng, 3, 8), dim = draw(rng, 1, 4), steps = draw(rng, 1, 6);
  Matrix table = random_matrix(vocab, dim, rng);
  std::vector<int> indices(steps);
  for (int& i : indices) i = static_cast<int>(rng.below(vocab));
  const Matrix weights = random_matrix(steps, dim, rng);
  Matrix grad(vocab, dim);
  return nn::grad_check(
      {{"table", &table, &grad}},
      [&] { return weighted_sum(nn::embedding_forward(table, indices), weights); },
      [&] {
        grad.set_zero();
        nn::embedding_backward(indices, weights, grad);
      });
}

nn::GradCheckReport conv_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t k = draw(rng, 1, 4), e = draw(rng, 1, 3), f = draw(rng, 1, 3);
  const std::size_t t = k + draw(rng, 0, 4);
  Matrix input = random_matrix(t, e, rng);
  Matrix weights = random_matrix(k * e, f, rng);
  Matrix bias = random_matrix(1, f, rng);
  const Matrix upstream = random_matrix(t - k + 1, f, rng);
  Matrix d_input, d_weights(k * e, f), d_bias(1, f);
  return nn::grad_check(
      {{"input", &input, &d_input}, {"weights", &weights, &d_weights}, {"bias", &bias, &d_bias}},
      [&] { return weighted_sum(nn::conv1d_forward(input, weights, bias.row(0), k), upstream); },
      [&] {
        d_weights.set_zero();
        d_bias.set_zero();
        d_input = nn::conv1d_backward(input, weights, k, upstream, d_weights, d_bias.row(0));
      });
}

nn::GradCheckReport pooling_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t t = draw(rng, 1, 6), h = draw(rng, 1, 4);
  const std::size_t count = draw(rng, 1, t);
  Matrix input = random_matrix(t, h, rng);
  const Vector upstream = random_matrix(1, h, rng).values();
  Matrix d_mean, d_masked;
  Matrix input_copy = input;
  auto mean_report = nn::grad_check(
      {{"mean_pool", &input, &d_mean}},
      [&] { return nn::dot(nn::global_mean_pool_forward(input), upstream); },
      [&] { d_mean = nn::global_mean_pool_backward(t, upstream); });
  auto masked_report = nn::grad_check(
      {{"masked_pool", &input_copy, &d_masked}},
      [&] { return nn::dot(nn::masked_mean_pool_forward(input_copy, count), upstream); },
      [&] { d_masked = nn::masked_mean_pool_backward(t, count, upstream); });
  mean_report.blocks.insert(mean_report.blocks.end(), masked_report.blocks.begin(),
                            masked_report.blocks.end());
  mean_report.passed = mean_report.passed && masked_report.passed;
  return mean_report;
}

nn::GradCheckReport dense_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = draw(rng, 1, 5), out = draw(rng, 1, 5);
  const auto activation = static_cast<nn::Activation>(seed % 3);
  Matrix input = random_matrix(1, in, rng);
  Matrix weights = random_matrix(out, in, rng);
  Matrix bias = random_matrix(1, out, rng);
  const Vector upstream = random_matrix(1, out, rng).values();
  Matrix d_input(1, in), d_weights(out, in), d_bias(1, out);
  return nn::grad_check(
      {{"input", &input, &d_input}, {"weights", &weights, &d_weights}, {"bias", &bias, &d_bias}},
      [&] {
        return nn::dot(nn::dense_forward(input.row(0), weights, bias.row(0), activation),
                       upstream);
      },
      [&] {
        d_weights.set_zero();
        d_bias.set_zero();
        const Vector output = nn::dense_forward(input.row(0), weights, bias.row(0), activation);
        const Vector g = nn::dense_backward(input.row(0), weights, output, activation, upstream,
                                            d_weights, d_bias.row(0));
        std::ranges::copy(g, d_input.row(0).begin());
      });
}

nn::GradCheckReport lstm_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t t = draw(rng, 1, 5), d = draw(rng, 1, 3), h = draw(rng, 1, 3);
  Matrix input = random_matrix(t, d, rng);
  Matrix wx = random_matrix(d, 4 * h, rng, 0.5);
  Matrix wh = random_matrix(h, 4 * h, rng, 0.5);
  Matrix b = random_matrix(1, 4 * h, rng, 0.5);
  const Matrix upstream = random_matrix(t, h, rng);
  Matrix d_input, d_wx(d, 4 * h), d_wh(h, 4 * h), d_b(1, 4 * h);
  return nn::grad_check(
      {{"input", &input, &d_input},
       {"input_weights", &wx, &d_wx},
       {"recurrent_weights", &wh, &d_wh},
       {"bias", &b, &d_b}},
      [&] { return weighted_sum(nn::lstm_sequence_forward(input, {wx, wh, b}), upstream); },
      [&] {
        d_wx.set_zero();
        d_wh.set_zero();
        d_b.set_zero();
        nn::LstmCache cache;
        nn::lstm_sequence_forward(input, {wx, wh, b}, &cache);
        d_input = nn::lstm_sequence_backward(cache, {wx, wh, b}, upstream, {d_wx, d_wh, d_b});
      });
}

nn::GradCheckReport softmax_case(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t k = draw(rng, 2, 6);
  const std::size_t cls = static_cast<std::size_t>(rng.below(k));
  Matrix logits = random_matrix(1, k, rng, 3.0);
  Matrix d_logits(1, k);
  return nn::grad_check(
      {{"logits", &logits, &d_logits}},
      [&] { return nn::softmax_cross_entropy(logits.row(0), cls).loss; },
      [&] {
        const auto ce = nn::softmax_cross_entropy(logits.row(0), cls);
        std::ranges::copy(ce.grad, d_logits.row(0).begin());
      });
}

std::vector<GradTarget> targets_of(const std::vector<nn::Parameter*>& params) {
  std::vector<GradTarget> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back({"param" + std::to_string(i), &params[i]->value, &params[i]->grad});
  }
  return out;
}

// Full combined objective: M utterances of mixed lengths (some shorter than
// the largest kernel) through the MCNN, with the verification term coupling
// every pair of embeddings.
nn::GradCheckReport mcnn_objective_case(std::uint64_t seed) {
  Rng rng(seed);
  text::McnnConfig config;
  config.kernel_sizes = seed % 2 == 0 ? std::vector<std::size_t>{1, 2, 3}
                                      : std::vector<std::size_t>{1, 3};
  config.embed_dim = draw(rng, 2, 3);
  config.filters_per_module = draw(rng, 2, 3);
  config.num_classes = draw(rng, 2, 3);
  config.lambda = 0.15;
  const std::size_t vocab = 9;
  Rng init(seed + 1000);
  text::McnnModel model(config, vocab, init);
  // Larger weights keep relu pre-activations away from their kink.
  for (nn::Parameter* p : model.parameters()) {
    for (double& x : p->value.data()) x *= 4.0;
  }

  const std::size_t m = draw(rng, 2, 4);
  std::vector<text::PaddedTokens> batch;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<int> idx(draw(rng, 1, 6));
    for (int& x : idx) x = 1 + static_cast<int>(rng.below(vocab - 1));
    batch.push_back(text::pad_tokens(std::move(idx), config.max_kernel()));
    labels.push_back(static_cast<std::size_t>(rng.below(config.num_classes)));
  }
  auto objective = [&] {
    std::vector<text::McnnForward> forwards;
    std::vector<text::PairSample> samples;
    for (std::size_t i = 0; i < m; ++i) {
      forwards.push_back(text::mcnn_forward(model, batch[i]));
      samples.push_back({forwards.back().embedding, forwards.back().logits, labels[i]});
    }
    return std::pair{std::move(forwards), text::batch_objective(samples, config.lambda)};
  };
  return nn::grad_check(
      targets_of(model.parameters()),
      [&] {
        // The padding row is not a free parameter.
        std::ranges::fill(model.embedding.value.row(0), 0.0);
        return objective().second.total;
      },
      [&] {
        model.zero_grad();
        auto [forwards, result] = objective();
        for (std::size_t i = 0; i < m; ++i) {
          text::mcnn_backward(model, forwards[i], result.embedding_grads[i],
                              result.logits_grads[i]);
        }
      });
}

// Full acoustic branch in train mode; reseeding the dropout stream on every
// evaluation freezes the mask.
nn::GradCheckReport acoustic_case(std::uint64_t seed) {
  Rng rng(seed);
  acoustic::LstmConfig config;
  config.input_dim = draw(rng, 1, 3);
  config.num_lstm_layers = draw(rng, 1, 2);
  config.units_per_layer = draw(rng, 1, 3);
  config.dense_units = draw(rng, 2, 4);
  config.num_classes = draw(rng, 2, 3);
  config.dropout_prob = 0.3;
  Rng init(seed + 2000);
  acoustic::AcousticModel model(config, init);
  for (nn::Parameter* p : model.parameters()) {
    for (double& x : p->value.data()) x = 0.8 * rng.normal();
  }
  const Matrix frames = random_matrix(draw(rng, 1, 4), config.input_dim, rng);
  const std::size_t label = static_cast<std::size_t>(rng.below(config.num_classes));
  const std::uint64_t dropout_seed = seed * 31 + 7;
  auto forward = [&] {
    Rng drop(dropout_seed);
    return acoustic::acoustic_forward(model, frames, nn::Mode::train, drop);
  };
  return nn::grad_check(
      targets_of(model.parameters()),
      [&] { return nn::softmax_cross_entropy(forward().logits, label).loss; },
      [&] {
        model.zero_grad();
        const auto fw = forward();
        const auto ce = nn::softmax_cross_entropy(fw.logits, label);
        acoustic::acoustic_backward(model, fw, ce.grad);
      });
}

}  // namespace

const std::vector<GradCase>& gradient_cases() {
  static const std::vector<GradCase> cases{
      {"embedding", embedding_case}, {"conv1d", conv_case},
      {"pooling", pooling_case},     {"dense", dense_case},
      {"lstm", lstm_case},           {"softmax_ce", softmax_case},
      {"mcnn_objective", mcnn_objective_case}, {"acoustic_branch", acoustic_case},
  };
  return cases;
}

}  // namespace emorec::testing
