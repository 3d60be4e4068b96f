#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "emorec/acoustic/trainer.hpp"
#include "emorec/data/corpus.hpp"
#include "emorec/data/folds.hpp"
#include "emorec/data/synth.hpp"
#include "emorec/error.hpp"
#include "emorec/eval/metrics.hpp"
#include "emorec/text/trainer.hpp"
#include "support.hpp"

using namespace emorec;
using data::Corpus;

namespace {

Corpus corpus_with_counts(const std::vector<std::size_t>& counts) {
  Corpus c;
  for (std::size_t k = 0; k < counts.size(); ++k) c.label_names.push_back("c" + std::to_string(k));
  std::size_t id = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (std::size_t n = 0; n < counts[k]; ++n) {
      c.utterances.push_back({"u" + std::to_string(id), "s" + std::to_string(id % 7), k, "", {}, {}});
      ++id;
    }
  }
  return c;
}

data::SynthSpec small_spec(double text_signal) {
  data::SynthSpec spec;
  spec.class_counts = {80, 80, 80, 80};
  spec.num_speakers = 10;
  spec.feature_dim = 4;
  spec.mean_frames = 4;
  spec.text_signal = text_signal;
  return spec;
}

// Multinomial naive Bayes with add-one smoothing, trained on `train` and
// scored on `test`.
double naive_bayes_ua(const Corpus& corpus, const std::vector<std::size_t>& train,
                      const std::vector<std::size_t>& test) {
  const std::size_t k = corpus.num_classes();
  std::vector<std::map<std::string, double>> counts(k);
  std::vector<double> totals(k, 0.0), priors(k, 0.0);
  std::set<std::string> vocab;
  for (std::size_t i : train) {
    const auto& u = corpus.utterances[i];
    priors[u.label] += 1.0;
    for (const auto& t : u.tokens) {
      counts[u.label][t] += 1.0;
      totals[u.label] += 1.0;
      vocab.insert(t);
    }
  }
  const double v = static_cast<double>(vocab.size());
  std::vector<std::size_t> pred, labels;
  for (std::size_t i : test) {
    const auto& u = corpus.utterances[i];
    std::size_t best = 0;
    double best_score = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      double s = std::log(priors[c]);
      for (const auto& t : u.tokens) {
        const auto it = counts[c].find(t);
        s += std::log(((it == counts[c].end() ? 0.0 : it->second) + 1.0) / (totals[c] + v));
      }
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    pred.push_back(best);
    labels.push_back(u.label);
  }
  return eval::unweighted_accuracy(eval::confusion(pred, labels, k));
}

double synth_oracle_ua(double text_signal, std::uint64_t seed) {
  nn::Rng rng(seed);
  const auto synth = data::synth_corpus(small_spec(text_signal), rng);
  nn::Rng fold_rng(seed + 100);
  const auto plan = data::make_folds(synth.corpus, 5, fold_rng);
  const auto round = plan.round(0);
  return naive_bayes_ua(synth.corpus, round.train, round.test);
}

}  // namespace

TEST_CASE("manifest loading") {
  testing::TempDir dir("manifest");
  testing::write_file(dir / "m.jsonl",
                      "{\"labels\": [\"angry\", \"happy\", \"sad\", \"neutral\"]}\n"
                      "{\"id\": \"a\", \"speaker\": \"s1\", \"label\": \"angry\", \"transcript\": "
                      "\"I can't BELIEVE this!\", \"features\": \"f/a.csv\"}\n"
                      "{\"id\": \"b\", \"speaker\": \"s1\", \"label\": \"sad\", \"transcript\": \"oh\"}\n"
                      "\n"
                      "{\"id\": \"c\", \"speaker\": \"s2\", \"label\": \"neutral\", \"transcript\": \"\"}\n"
                      "{\"id\": \"d\", \"speaker\": \"s3\", \"label\": \"happy\", \"transcript\": \"yes\"}\n");
  const Corpus c = data::load_corpus(dir / "m.jsonl");
  CHECK(c.num_classes() == 4);
  REQUIRE(c.size() == 4);
  CHECK(c.utterances[0].tokens == std::vector<std::string>{"i", "can't", "believe", "this"});
  CHECK(c.utterances[1].label == 2);
  CHECK(c.utterances[2].tokens.empty());
  CHECK(c.class_counts() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(c.feature_file(c.utterances[0]) == dir / "f/a.csv");
  CHECK_THROWS_AS(c.feature_file(c.utterances[1]), CoverageError);

  testing::write_file(dir / "dup.jsonl",
                      "{\"labels\": [\"x\", \"y\"]}\n"
                      "{\"id\": \"a\", \"speaker\": \"s\", \"label\": \"x\", \"transcript\": \"\"}\n"
                      "{\"id\": \"a\", \"speaker\": \"s\", \"label\": \"y\", \"transcript\": \"\"}\n");
  CHECK_THROWS_AS(data::load_corpus(dir / "dup.jsonl"), FormatError);
  testing::write_file(dir / "label.jsonl",
                      "{\"labels\": [\"x\", \"y\"]}\n"
                      "{\"id\": \"a\", \"speaker\": \"s\", \"label\": \"z\", \"transcript\": \"\"}\n");
  CHECK_THROWS_AS(data::load_corpus(dir / "label.jsonl"), FormatError);
  testing::write_file(dir / "broken.jsonl", "{\"labels\": [\"x\", \"y\"]}\n{not json\n");
  CHECK_THROWS_AS(data::load_corpus(dir / "broken.jsonl"), FormatError);
  CHECK_THROWS_AS(data::load_corpus(dir / "absent.jsonl"), IoError);
}

TEST_CASE("manifest round trip") {
  nn::Rng rng(1);
  const auto synth = data::synth_corpus(small_spec(1.0), rng);
  testing::TempDir dir("rt");
  data::write_manifest(synth.corpus, dir / "m.jsonl");
  const Corpus back = data::load_corpus(dir / "m.jsonl");
  REQUIRE(back.size() == synth.corpus.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.utterances[i].id == synth.corpus.utterances[i].id);
    CHECK(back.utterances[i].tokens == synth.corpus.utterances[i].tokens);
    CHECK(back.utterances[i].label == synth.corpus.utterances[i].label);
  }
}

TEST_CASE("one speaker per fold") {
  Corpus c = corpus_with_counts({10, 10});
  for (std::size_t i = 0; i < c.size(); ++i) c.utterances[i].speaker = "s" + std::to_string(i % 5);
  nn::Rng rng(2);
  const auto plan = data::make_folds(c, 5, rng);
  REQUIRE(plan.num_folds() == 5);
  for (const auto& fold : plan.folds) {
    CHECK(fold.size() == 4);
    std::set<std::string> speakers;
    for (std::size_t i : fold) speakers.insert(c.utterances[i].speaker);
    CHECK(speakers.size() == 1);
  }
  const auto round = plan.round(4);
  CHECK(round.test == plan.folds[4]);
  CHECK(round.validation == plan.folds[0]);
  CHECK(round.train.size() == 12);
  CHECK_THROWS_AS(plan.round(5), IndexError);
}

TEST_CASE("folds partition the corpus without sharing speakers") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = small_spec(1.0);
    spec.num_speakers = 12 + seed;
    spec.speaker_skew = 0.1 * static_cast<double>(seed);
    nn::Rng rng(seed);
    const auto synth = data::synth_corpus(spec, rng);
    nn::Rng fold_rng(seed + 50);
    const auto plan = data::make_folds(synth.corpus, 5, fold_rng);
    CHECK(data::speaker_overlap(synth.corpus, plan).empty());
    std::vector<int> seen(synth.corpus.size(), 0);
    for (const auto& fold : plan.folds)
      for (std::size_t i : fold) ++seen[i];
    CHECK(std::ranges::all_of(seen, [](int n) { return n == 1; }));
    for (std::size_t r = 0; r < 5; ++r) {
      const auto round = plan.round(r);
      CHECK(round.train.size() + round.validation.size() + round.test.size() == synth.corpus.size());
    }
  }
}

TEST_CASE("fold sizes stay balanced under speaker skew") {
  auto spec = small_spec(1.0);
  spec.num_speakers = 10;
  spec.speaker_skew = 0.5;
  nn::Rng rng(3);
  const auto synth = data::synth_corpus(spec, rng);
  nn::Rng fold_rng(4);
  const auto plan = data::make_folds(synth.corpus, 5, fold_rng);
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& fold : plan.folds) {
    lo = std::min(lo, fold.size());
    hi = std::max(hi, fold.size());
  }
  CHECK(static_cast<double>(hi) <= 2.0 * static_cast<double>(lo));
}

TEST_CASE("fold errors") {
  Corpus c = corpus_with_counts({3, 3});
  for (std::size_t i = 0; i < c.size(); ++i) c.utterances[i].speaker = "s" + std::to_string(i % 4);
  nn::Rng rng(5);
  CHECK_THROWS_AS(data::make_folds(c, 5, rng), ConfigError);
  CHECK_THROWS_AS(data::make_folds(c, 2, rng), ConfigError);
  CHECK_NOTHROW(data::make_folds(c, 4, rng));
}

TEST_CASE("class balancing") {
  const Corpus c = corpus_with_counts({5160, 1735, 161898});
  nn::Rng rng(6);
  const Corpus b = data::balance_classes(c, rng);
  CHECK(b.class_counts() == std::vector<std::size_t>{1735, 1735, 1735});
  // Kept utterances keep their relative order.
  std::size_t last = 0;
  for (const auto& u : b.utterances) {
    const std::size_t n = std::stoul(u.id.substr(1));
    CHECK(n >= last);
    last = n;
  }
  nn::Rng again_rng(6);
  const Corpus again = data::balance_classes(c, again_rng);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(again.utterances[i].id == b.utterances[i].id);

  const Corpus even = corpus_with_counts({4, 4});
  const Corpus same = data::balance_classes(even, rng);
  for (std::size_t i = 0; i < even.size(); ++i) CHECK(same.utterances[i].id == even.utterances[i].id);

  CHECK_THROWS_AS(data::balance_classes(corpus_with_counts({3, 0}), rng), DegenerateDataError);
}

TEST_CASE("synthetic corpora are deterministic on disk") {
  const auto spec = small_spec(0.7);
  testing::TempDir a("syn_a"), b("syn_b");
  for (const auto* dir : {&a, &b}) {
    nn::Rng rng(7);
    data::write_synth_corpus(data::synth_corpus(spec, rng), spec, 7, dir->path());
  }
  CHECK(testing::slurp(a / "manifest.jsonl") == testing::slurp(b / "manifest.jsonl"));
  CHECK(testing::slurp(a / "synth_spec.json") == testing::slurp(b / "synth_spec.json"));
  CHECK(testing::slurp(a / "features/utt00042.csv") == testing::slurp(b / "features/utt00042.csv"));
  CHECK(data::synth_spec_from_json(data::to_json(spec)).text_signal == 0.7);

  auto bad = spec;
  bad.text_signal = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(data::synth_spec_from_json(nlohmann::json{{"bogus", 1}}), ConfigError);
}

TEST_CASE("synthetic text signal controls separability") {
  CHECK(synth_oracle_ua(1.0, 11) > 0.99);
  double mean_zero = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) mean_zero += synth_oracle_ua(0.0, 20 + s) / 5.0;
  CHECK(std::abs(mean_zero - 0.25) < 0.1);

  for (std::uint64_t s = 0; s < 5; ++s) {
    const double u0 = synth_oracle_ua(0.0, 30 + s);
    const double u5 = synth_oracle_ua(0.5, 30 + s);
    const double u1 = synth_oracle_ua(1.0, 30 + s);
    CHECK(u5 >= u0 - 0.02);
    CHECK(u1 >= u5 - 0.02);
  }
}

TEST_CASE("vocabulary and normalizer see only training utterances") {
  nn::Rng rng(8);
  const auto synth = data::synth_corpus(small_spec(0.8), rng);
  nn::Rng fold_rng(9);
  const auto plan = data::make_folds(synth.corpus, 5, fold_rng);
  const auto round = plan.round(1);

  Corpus mutated = synth.corpus;
  auto features = synth.features;
  for (std::size_t i : round.test) {
    mutated.utterances[i].tokens = {"leaked", "token"};
    for (double& x : features[i].data()) x = 1e6;
  }
  for (std::size_t i : round.validation) mutated.utterances[i].tokens.push_back("leaked");

  const auto vocab = text::build_vocabulary(synth.corpus, round.train);
  const auto vocab_mut = text::build_vocabulary(mutated, round.train);
  CHECK(vocab.tokens() == vocab_mut.tokens());
  CHECK_FALSE(vocab_mut.contains("leaked"));

  const auto norm = acoustic::fit_normalizer(synth.features, round.train);
  const auto norm_mut = acoustic::fit_normalizer(features, round.train);
  CHECK(norm.mean() == norm_mut.mean());
  CHECK(norm.stddev() == norm_mut.stddev());

  // Positive control.
  features[round.train.front()].data()[0] += 1.0;
  CHECK(acoustic::fit_normalizer(features, round.train).mean() != norm.mean());
}
