#include <doctest.h>

#include <cmath>

#include "emorec/acoustic/features.hpp"
#include "emorec/acoustic/model.hpp"
#include "emorec/acoustic/trainer.hpp"
#include "emorec/data/folds.hpp"
#include "emorec/data/synth.hpp"
#include "emorec/error.hpp"
#include "emorec/nn/layers.hpp"
#include "support.hpp"

using namespace emorec;
using acoustic::AcousticModel;
using acoustic::LstmConfig;
using nn::Matrix;
using nn::Vector;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string csv_rows(std::size_t rows, std::size_t cols) {
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out += (c ? "," : "") + std::to_string(0.25 * static_cast<double>(r + c));
    }
    out += "\n";
  }
  return out;
}

LstmConfig tiny_config(std::size_t d, std::size_t h, std::size_t k) {
  LstmConfig config;
  config.input_dim = d;
  config.num_lstm_layers = 1;
  config.units_per_layer = h;
  config.dense_units = h;
  config.num_classes = k;
  return config;
}

Matrix random_frames(std::size_t t, std::size_t d, nn::Rng& rng) {
  Matrix m(t, d);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("feature csv loading") {
  testing::TempDir dir("features");
  testing::write_file(dir / "ok.csv", csv_rows(3, 88));
  const auto seq = acoustic::load_feature_csv(dir / "ok.csv");
  CHECK(seq.steps() == 3);
  CHECK(seq.dim() == 88);
  CHECK(seq.utterance_id == "ok");

  testing::write_file(dir / "ragged.csv", csv_rows(1, 88) + csv_rows(1, 87));
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "ragged.csv"), FormatError);
  testing::write_file(dir / "nan.csv", "1,2,3\n4,NaN,6\n");
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "nan.csv"), NumericError);
  testing::write_file(dir / "inf.csv", "1,inf\n");
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "inf.csv"), NumericError);
  testing::write_file(dir / "text.csv", "1,abc\n");
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "text.csv"), FormatError);
  testing::write_file(dir / "empty.csv", "");
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "empty.csv"), EmptySequenceError);
  CHECK_THROWS_AS(acoustic::load_feature_csv(dir / "missing.csv"), IoError);
}

TEST_CASE("feature csv round trip is exact") {
  testing::TempDir dir("roundtrip");
  nn::Rng rng(1);
  const Matrix frames = random_frames(5, 7, rng);
  acoustic::write_feature_csv(dir / "f.csv", frames);
  CHECK(acoustic::load_feature_csv(dir / "f.csv").frames == frames);
}

TEST_CASE("normalizer uses training statistics") {
  const Matrix a = Matrix::from_rows({{1, 5}, {3, 5}});
  const Matrix b = Matrix::from_rows({{5, 5}});
  const std::vector<const Matrix*> seqs{&a, &b};
  const auto norm = acoustic::FeatureNormalizer::fit(seqs);
  CHECK(norm.mean() == Vector{3, 5});
  CHECK(std::abs(norm.stddev()[0] - std::sqrt(8.0 / 3.0)) < 1e-12);
  CHECK(norm.stddev()[1] == 1.0);  // constant dimension
  const Matrix z = norm.apply(a);
  CHECK(z(1, 0) == 0.0);
  CHECK(z(0, 1) == 0.0);
  CHECK_THROWS_AS(norm.apply(Matrix(2, 3)), ShapeError);
}

TEST_CASE("presets") {
  const auto ie = LstmConfig::preset("iemocap", 4);
  CHECK(ie.num_lstm_layers == 2);
  CHECK(ie.units_per_layer == 256);
  CHECK(ie.dense_units == 256);
  CHECK(ie.num_classes == 4);
  CHECK(ie.dropout_prob == 0.5);
  CHECK(ie.batch_size == 40);
  CHECK(ie.input_dim == 88);
  const auto cc = LstmConfig::preset("callcenter", 3);
  CHECK(cc.num_lstm_layers == 1);
  CHECK(cc.units_per_layer == 96);
  CHECK_THROWS_AS(LstmConfig::preset("other", 3), ConfigError);
  LstmConfig bad = ie;
  bad.dropout_prob = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("zero weights give uniform posteriors") {
  nn::Rng rng(2);
  AcousticModel model(tiny_config(3, 4, 4), rng);
  for (nn::Parameter* p : model.parameters()) p->value.set_zero();
  const auto fw = acoustic::acoustic_forward(model, random_frames(6, 3, rng), nn::Mode::eval, rng);
  for (double p : fw.posteriors) CHECK(p == 0.25);
}

TEST_CASE("single frame pooling is the identity") {
  nn::Rng rng(3);
  AcousticModel model(tiny_config(3, 4, 2), rng);
  const Matrix frame = random_frames(1, 3, rng);
  const auto fw = acoustic::acoustic_forward(model, frame, nn::Mode::eval, rng);
  const auto& hidden = fw.caches.back().hidden;
  for (std::size_t h = 0; h < 4; ++h) CHECK(fw.pooled[h] == hidden(0, h));
}

TEST_CASE("scalar hand-evaluated branch") {
  nn::Rng rng(4);
  AcousticModel model(tiny_config(1, 1, 2), rng);
  // Gate order: input, forget, candidate, output.
  const double wx[4] = {0.5, -0.3, 0.8, 0.2}, wh[4] = {0.1, 0.4, -0.6, 0.3},
               b[4] = {0.0, 1.0, 0.1, -0.2};
  for (int g = 0; g < 4; ++g) {
    model.layers[0].input.value(0, g) = wx[g];
    model.layers[0].recurrent.value(0, g) = wh[g];
    model.layers[0].bias.value(0, g) = b[g];
  }
  model.hidden_weights.value(0, 0) = 2.0;
  model.hidden_bias.value(0, 0) = 0.1;
  model.output_weights.value(0, 0) = 1.5;
  model.output_weights.value(1, 0) = -0.5;
  model.output_bias.value(0, 0) = 0.0;
  model.output_bias.value(0, 1) = 0.3;

  const double x[2] = {1.0, -0.5};
  double h = 0.0, c = 0.0, sum_h = 0.0;
  for (double xt : x) {
    const double i = sigmoid(wx[0] * xt + wh[0] * h + b[0]);
    const double f = sigmoid(wx[1] * xt + wh[1] * h + b[1]);
    const double g = std::tanh(wx[2] * xt + wh[2] * h + b[2]);
    const double o = sigmoid(wx[3] * xt + wh[3] * h + b[3]);
    c = f * c + i * g;
    h = o * std::tanh(c);
    sum_h += h;
  }
  const double pooled = sum_h / 2.0;
  const double dense = std::max(0.0, 2.0 * pooled + 0.1);
  const double l0 = 1.5 * dense, l1 = -0.5 * dense + 0.3;
  const double p0 = 1.0 / (1.0 + std::exp(l1 - l0));

  const auto fw = acoustic::acoustic_forward(model, Matrix::from_rows({{1.0}, {-0.5}}),
                                             nn::Mode::eval, rng);
  CHECK(std::abs(fw.pooled[0] - pooled) < 1e-10);
  CHECK(std::abs(fw.logits[0] - l0) < 1e-10);
  CHECK(std::abs(fw.logits[1] - l1) < 1e-10);
  CHECK(std::abs(fw.posteriors[0] - p0) < 1e-10);
}

TEST_CASE("posteriors normalize and recurrence is live") {
  nn::Rng rng(5);
  AcousticModel model(tiny_config(4, 6, 3), rng);
  const Matrix frames = random_frames(7, 4, rng);
  Matrix reversed(7, 4);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t d = 0; d < 4; ++d) reversed(t, d) = frames(6 - t, d);
  const auto a = acoustic::acoustic_forward(model, frames, nn::Mode::eval, rng);
  const auto b = acoustic::acoustic_forward(model, reversed, nn::Mode::eval, rng);
  double s = 0.0;
  for (double p : a.posteriors) s += p;
  CHECK(std::abs(s - 1.0) < 1e-12);
  CHECK(a.pooled != b.pooled);
  CHECK_THROWS_AS(acoustic::acoustic_forward(model, Matrix(3, 5), nn::Mode::eval, rng), ShapeError);
  CHECK_THROWS_AS(acoustic::acoustic_forward(model, Matrix(0, 4), nn::Mode::eval, rng),
                  EmptySequenceError);
}

TEST_CASE("raw-frame pooling is invariant to frame duplication") {
  nn::Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 1 + rng.below(30);
    const Matrix frames = random_frames(t, 5, rng);
    Matrix doubled(2 * t, 5);
    for (std::size_t i = 0; i < t; ++i) {
      std::ranges::copy(frames.row(i), doubled.row(2 * i).begin());
      std::ranges::copy(frames.row(i), doubled.row(2 * i + 1).begin());
    }
    CHECK(acoustic::pool_frames(frames) == acoustic::pool_frames(doubled));
  }
}

TEST_CASE("training on class-dependent frame means") {
  data::SynthSpec spec;
  spec.class_counts = {50, 50, 50, 50};
  spec.num_speakers = 10;
  spec.feature_dim = 16;
  spec.mean_frames = 8;
  nn::Rng rng(7);
  const auto synth = data::synth_corpus(spec, rng);
  nn::Rng fold_rng(8);
  const auto plan = data::make_folds(synth.corpus, 5, fold_rng);
  const auto round = plan.round(0);
  const auto norm = acoustic::fit_normalizer(synth.features, round.train);
  const auto train = acoustic::make_examples(synth.corpus, synth.features, round.train, norm);
  const auto val = acoustic::make_examples(synth.corpus, synth.features, round.validation, norm);

  nn::TrainConfig config;
  config.epochs = 30;
  config.seed = 9;
  config.keep_best = false;
  config.batch_size = 10;
  auto run = [&] {
    nn::Rng init(10);
    return acoustic::train_acoustic(AcousticModel(tiny_config(16, 12, 4), init), train, val, config);
  };
  const auto result = run();
  REQUIRE(result.log.size() == 31);
  // Before any update the loss sits near ln K.
  CHECK(std::abs(result.log[0].train_loss - std::log(4.0)) / std::log(4.0) < 0.10);

  std::vector<std::size_t> pred, labels;
  for (const auto& ex : train) {
    pred.push_back(nn::argmax(acoustic::acoustic_predict(result.model, ex.frames)));
    labels.push_back(ex.label);
  }
  CHECK(nn::score_predictions(pred, labels, 4).ua > 0.95);

  const auto again = run();
  for (std::size_t e = 0; e < result.log.size(); ++e) {
    CHECK(nn::to_json(result.log[e]) == nn::to_json(again.log[e]));
  }
}

TEST_CASE("corpus features require coverage") {
  data::Corpus corpus;
  corpus.label_names = {"a", "b"};
  corpus.utterances.push_back({"u1", "s1", 0, "hi", {"hi"}, std::nullopt});
  CHECK_THROWS_AS(acoustic::load_corpus_features(corpus), CoverageError);
}
