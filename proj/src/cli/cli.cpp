#include "emorec/cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "emorec/acoustic/trainer.hpp"
#include "emorec/data/corpus.hpp"
#include "emorec/data/folds.hpp"
#include "emorec/data/synth.hpp"
#include "emorec/error.hpp"
#include "emorec/evector/evector.hpp"
#include "emorec/fusion/fusion.hpp"
#include "emorec/io/checkpoint.hpp"
#include "emorec/text/trainer.hpp"

namespace emorec::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---- small file helpers -------------------------------------------------

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// Timestamps live only here so every other output is reproducible.
void log_run(const fs::path& out_dir, const std::string& message) {
  std::ofstream log(out_dir / "run.log", std::ios::app);
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  log << stamp << ' ' << message << '\n';
}

// ---- run configuration --------------------------------------------------

struct RunConfig {
  fs::path base_dir;
  std::optional<fs::path> manifest;
  std::optional<data::SynthSpec> synth;
  std::uint64_t synth_seed = 0;
  bool balance = false;
  std::size_t folds = 5;
  std::size_t rounds = 0;  // 0 = every fold
  std::string preset = "iemocap";
  text::McnnConfig mcnn;
  std::optional<std::vector<double>> lambda_grid;
  acoustic::LstmConfig lstm;
  std::size_t epochs = 30;
  std::optional<std::size_t> batch_size;
  double learning_rate = 0.001;
  double evector_alpha = 1.0;
  fusion::SvmConfig svm;
  std::vector<std::string> combinations;
  std::size_t kernel_step = 3;
  std::size_t sweep_rounds = 1;
  bool report_wa = true;
  std::uint64_t seed = 1;
  fs::path out;

  json effective;  // fully resolved config echoed to the output directory
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> preset;
};

const std::set<std::string> kRunKeys{
    "manifest",    "synth",         "synth_seed",   "balance",   "folds",
    "rounds",      "preset",        "kernel_sizes", "embed_dim", "filters_per_module",
    "lambda",      "lambda_grid",   "lstm",         "epochs",    "batch_size",
    "learning_rate", "evector_alpha", "svm",        "combinations", "kernel_step",
    "sweep_rounds", "report_wa",    "seed",         "out"};

template <typename T>
T get_field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir, const Overrides& overrides) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kRunKeys.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  RunConfig c;
  c.base_dir = base_dir;
  c.seed = overrides.seed.value_or(get_field<std::uint64_t>(j, "seed", 1));
  if (j.contains("manifest") == j.contains("synth")) {
    throw ConfigError("config needs exactly one of 'manifest' or 'synth'");
  }
  if (j.contains("manifest")) {
    fs::path p = get_field<std::string>(j, "manifest", "");
    c.manifest = p.is_absolute() ? p : base_dir / p;
    if (!fs::exists(*c.manifest)) throw ConfigError("manifest " + c.manifest->string() + " not found");
  } else {
    c.synth = data::synth_spec_from_json(j.at("synth"));
    c.synth_seed = get_field<std::uint64_t>(j, "synth_seed", c.seed);
  }
  c.balance = get_field<bool>(j, "balance", false);
  c.folds = get_field<std::size_t>(j, "folds", 5);
  if (c.folds < 3) throw ConfigError("folds must be at least 3");
  c.rounds = get_field<std::size_t>(j, "rounds", 0);
  if (c.rounds > c.folds) throw ConfigError("rounds cannot exceed folds");
  if (c.rounds == 0) c.rounds = c.folds;

  c.preset = overrides.preset.value_or(get_field<std::string>(j, "preset", "iemocap"));
  if (c.preset != "iemocap" && c.preset != "callcenter" && c.preset != "explicit") {
    throw ConfigError("preset must be iemocap, callcenter or explicit");
  }
  // Class count is filled in once the corpus is known.
  c.mcnn = c.preset == "explicit" ? text::McnnConfig{} : text::McnnConfig::preset(c.preset, 2);
  if (c.preset == "explicit") {
    if (!j.contains("kernel_sizes")) throw ConfigError("explicit preset requires kernel_sizes");
  }
  if (j.contains("kernel_sizes")) {
    c.mcnn.kernel_sizes =
        text::kernel_schedule(get_field<std::vector<std::size_t>>(j, "kernel_sizes", {}));
  }
  c.mcnn.embed_dim = get_field<std::size_t>(j, "embed_dim", c.mcnn.embed_dim);
  c.mcnn.filters_per_module =
      get_field<std::size_t>(j, "filters_per_module", c.mcnn.filters_per_module);
  c.mcnn.lambda = get_field<double>(j, "lambda", c.mcnn.lambda);
  if (j.contains("lambda_grid")) {
    if (j.contains("lambda")) throw ConfigError("give either lambda or lambda_grid, not both");
    c.lambda_grid = get_field<std::vector<double>>(j, "lambda_grid", {});
    if (c.lambda_grid->empty()) throw ConfigError("lambda_grid is empty");
    for (double l : *c.lambda_grid) {
      if (!(l >= 0.0)) throw ConfigError("lambda_grid values must be >= 0");
    }
  }

  c.lstm = acoustic::LstmConfig::preset(c.preset == "explicit" ? "iemocap" : c.preset, 2);
  if (j.contains("lstm")) {
    const json& l = j.at("lstm");
    if (!l.is_object()) throw ConfigError("'lstm' must be an object");
    for (const auto& [key, value] : l.items()) {
      if (key != "num_lstm_layers" && key != "units_per_layer" && key != "dense_units" &&
          key != "dropout_prob" && key != "input_dim") {
        throw ConfigError("unknown lstm field '" + key + "'");
      }
    }
    c.lstm.num_lstm_layers = get_field<std::size_t>(l, "num_lstm_layers", c.lstm.num_lstm_layers);
    c.lstm.units_per_layer = get_field<std::size_t>(l, "units_per_layer", c.lstm.units_per_layer);
    c.lstm.dense_units = get_field<std::size_t>(l, "dense_units", c.lstm.dense_units);
    c.lstm.dropout_prob = get_field<double>(l, "dropout_prob", c.lstm.dropout_prob);
    c.lstm.input_dim = get_field<std::size_t>(l, "input_dim", c.lstm.input_dim);
  }

  c.epochs = get_field<std::size_t>(j, "epochs", 30);
  if (j.contains("batch_size")) c.batch_size = get_field<std::size_t>(j, "batch_size", 40);
  if (c.batch_size && *c.batch_size == 0) throw ConfigError("batch_size must be positive");
  c.learning_rate = get_field<double>(j, "learning_rate", 0.001);
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  c.evector_alpha = get_field<double>(j, "evector_alpha", 1.0);
  if (!(c.evector_alpha > 0.0)) throw ConfigError("evector_alpha must be positive");
  if (j.contains("svm")) {
    const json& s = j.at("svm");
    c.svm.c_reg = get_field<double>(s, "c_reg", c.svm.c_reg);
    c.svm.epochs = get_field<std::size_t>(s, "epochs", c.svm.epochs);
  }
  if (!(c.svm.c_reg > 0.0) || c.svm.epochs == 0) throw ConfigError("invalid svm settings");
  c.svm.seed = c.seed;
  c.combinations = get_field<std::vector<std::string>>(j, "combinations", {});
  for (const auto& combo : c.combinations) fusion::parse_combination(combo);
  c.kernel_step = get_field<std::size_t>(j, "kernel_step", 3);
  if (c.kernel_step == 0) throw ConfigError("kernel_step must be positive");
  c.sweep_rounds = get_field<std::size_t>(j, "sweep_rounds", 1);
  if (c.sweep_rounds == 0 || c.sweep_rounds > c.folds) throw ConfigError("sweep_rounds out of range");
  c.report_wa = get_field<bool>(j, "report_wa", true);

  if (overrides.out) {
    c.out = *overrides.out;
  } else if (j.contains("out")) {
    fs::path p = get_field<std::string>(j, "out", "");
    c.out = p.is_absolute() ? p : base_dir / p;
  } else {
    throw ConfigError("no output directory: give --out or an 'out' field");
  }
  return c;
}

json effective_json(const RunConfig& c, std::size_t num_classes) {
  json j;
  if (c.manifest) j["manifest"] = c.manifest->string();
  if (c.synth) {
    j["synth"] = data::to_json(*c.synth);
    j["synth_seed"] = c.synth_seed;
  }
  j["balance"] = c.balance;
  j["folds"] = c.folds;
  j["rounds"] = c.rounds;
  j["preset"] = c.preset;
  j["num_classes"] = num_classes;
  j["mcnn"] = {{"kernel_sizes", c.mcnn.kernel_sizes},
               {"embed_dim", c.mcnn.embed_dim},
               {"filters_per_module", c.mcnn.filters_per_module},
               {"lambda", c.mcnn.lambda}};
  if (c.lambda_grid) j["lambda_grid"] = *c.lambda_grid;
  j["lstm"] = {{"input_dim", c.lstm.input_dim},
               {"num_lstm_layers", c.lstm.num_lstm_layers},
               {"units_per_layer", c.lstm.units_per_layer},
               {"dense_units", c.lstm.dense_units},
               {"dropout_prob", c.lstm.dropout_prob},
               {"batch_size", c.lstm.batch_size}};
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["evector_alpha"] = c.evector_alpha;
  j["svm"] = {{"c_reg", c.svm.c_reg}, {"epochs", c.svm.epochs}};
  j["combinations"] = c.combinations;
  j["kernel_step"] = c.kernel_step;
  j["sweep_rounds"] = c.sweep_rounds;
  j["report_wa"] = c.report_wa;
  j["seed"] = c.seed;
  return j;
}

// ---- corpus + folds -----------------------------------------------------

struct Workspace {
  data::Corpus corpus;
  // Present for synthetic corpora; file-backed corpora load on demand.
  std::optional<std::vector<nn::Matrix>> features;
  data::FoldPlan plan;
};

Workspace prepare_workspace(RunConfig& c) {
  Workspace w;
  if (c.manifest) {
    w.corpus = data::load_corpus(*c.manifest);
  } else {
    nn::Rng rng(c.synth_seed);
    auto synth = data::synth_corpus(*c.synth, rng);
    w.corpus = std::move(synth.corpus);
    w.features = std::move(synth.features);
  }
  if (c.balance) {
    nn::Rng rng(c.seed * 2654435761ULL + 11);
    data::Corpus balanced = data::balance_classes(w.corpus, rng);
    if (w.features) {
      std::unordered_map<std::string, std::size_t> position;
      for (std::size_t i = 0; i < w.corpus.size(); ++i) position[w.corpus.utterances[i].id] = i;
      std::vector<nn::Matrix> kept;
      for (const auto& u : balanced.utterances) kept.push_back((*w.features)[position.at(u.id)]);
      w.features = std::move(kept);
    }
    w.corpus = std::move(balanced);
  }
  const std::size_t k = w.corpus.num_classes();
  c.mcnn.num_classes = k;
  c.mcnn.validate();
  c.lstm.num_classes = k;
  if (c.batch_size) c.lstm.batch_size = *c.batch_size;
  c.lstm.validate();
  nn::Rng fold_rng(c.seed * 6364136223846793005ULL + 1442695040888963407ULL);
  w.plan = data::make_folds(w.corpus, c.folds, fold_rng);
  c.effective = effective_json(c, k);
  return w;
}

void begin_outputs(const RunConfig& c, const Workspace& w, const std::string& command) {
  fs::create_directories(c.out);
  write_json(c.out / "effective_config.json", c.effective);
  write_json(c.out / "labels.json", json{{"labels", w.corpus.label_names}});
  json folds = json::array();
  for (const auto& fold : w.plan.folds) {
    json ids = json::array();
    for (std::size_t i : fold) ids.push_back(w.corpus.utterances[i].id);
    folds.push_back(std::move(ids));
  }
  write_json(c.out / "folds.json", json{{"folds", folds}});
  log_run(c.out, command + " started");
}

nn::TrainConfig train_config(const RunConfig& c, std::size_t batch_size, std::size_t round,
                             std::uint64_t salt) {
  nn::TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = batch_size;
  t.adam.learning_rate = c.learning_rate;
  t.seed = c.seed * 1000003ULL + salt * 101ULL + round;
  return t;
}

void write_results(const RunConfig& c, const eval::ResultTable& table) {
  write_text(c.out / "results.txt", table.to_text());
  write_json(c.out / "results.json", table.to_json());
}

struct SplitPositions {
  fusion::Split split;
  const std::vector<std::size_t>* positions;
};

// ---- commands -------------------------------------------------------------

int cmd_synth(const fs::path& config_path, std::optional<std::uint64_t> seed,
              const fs::path& out_dir, std::ostream& out) {
  const json j = read_json(config_path);
  const data::SynthSpec spec = data::synth_spec_from_json(j);
  const std::uint64_t s = seed.value_or(0);
  nn::Rng rng(s);
  const auto synth = data::synth_corpus(spec, rng);
  data::write_synth_corpus(synth, spec, s, out_dir);
  log_run(out_dir, "synth-data wrote " + std::to_string(synth.corpus.size()) + " utterances");
  out << "wrote " << synth.corpus.size() << " utterances to " << out_dir.string() << '\n';
  return 0;
}

int cmd_train_text(RunConfig& c, std::ostream& out) {
  Workspace w = prepare_workspace(c);
  begin_outputs(c, w, "train-text");
  fs::create_directories(c.out / "checkpoints");
  const std::size_t k = w.corpus.num_classes();

  fusion::ScoreSet scores;
  std::string log_lines;
  eval::ConfusionMatrix pooled(k, w.corpus.label_names);
  for (std::size_t r = 0; r < c.rounds; ++r) {
    const data::Round round = w.plan.round(r);
    const text::Vocabulary vocab = text::build_vocabulary(w.corpus, round.train);
    const auto train = text::encode_examples(w.corpus, round.train, vocab);
    const auto val = text::encode_examples(w.corpus, round.validation, vocab);
    nn::Rng init(c.seed * 7919ULL + r);
    text::McnnModel initial(c.mcnn, vocab.size(), init);
    const auto tc = train_config(c, c.batch_size.value_or(40), r, 1);

    text::TextTrainResult trained;
    if (c.lambda_grid) {
      auto search = text::select_lambda(initial, train, val, tc, *c.lambda_grid);
      trained = std::move(search.best);
    } else {
      trained = text::train_text_model(std::move(initial), train, val, tc);
    }
    for (const auto& rec : trained.log) {
      json line = nn::to_json(rec);
      line["round"] = r;
      line["lambda"] = trained.model.config().lambda;
      log_lines += line.dump() + "\n";
    }
    io::save_checkpoint(c.out / "checkpoints" / ("mcnn_round" + std::to_string(r) + ".ckpt"),
                        io::serialize_checkpoint(trained.model, vocab));

    for (const SplitPositions sp : {SplitPositions{fusion::Split::train, &round.train},
                                    SplitPositions{fusion::Split::validation, &round.validation},
                                    SplitPositions{fusion::Split::test, &round.test}}) {
      const auto examples = text::encode_examples(w.corpus, *sp.positions, vocab);
      for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& u = w.corpus.utterances[(*sp.positions)[i]];
        auto posteriors = text::mcnn_predict(trained.model, examples[i]).posteriors;
        if (sp.split == fusion::Split::test) pooled.add(u.label, nn::argmax(posteriors));
        scores.add({r, sp.split, u.id, "mcnn", u.label, std::move(posteriors)});
      }
    }
  }
  scores.save(c.out / "scores.jsonl");
  write_text(c.out / "epoch_log.jsonl", log_lines);
  eval::ResultTable table{w.corpus.label_names, {eval::summarize("mcnn", pooled)}, c.report_wa};
  write_results(c, table);
  log_run(c.out, "train-text finished");
  out << table.to_text();
  return 0;
}

int cmd_train_acoustic(RunConfig& c, std::ostream& out) {
  Workspace w = prepare_workspace(c);
  // Features must exist for every utterance before any output is written.
  std::vector<nn::Matrix> features =
      w.features ? std::move(*w.features) : acoustic::load_corpus_features(w.corpus);
  for (const auto& f : features) {
    if (f.cols() != c.lstm.input_dim) {
      throw ShapeError("feature files have " + std::to_string(f.cols()) +
                       " columns but the LSTM expects " + std::to_string(c.lstm.input_dim));
    }
  }
  begin_outputs(c, w, "train-acoustic");
  fs::create_directories(c.out / "checkpoints");
  const std::size_t k = w.corpus.num_classes();

  fusion::ScoreSet scores;
  std::string log_lines;
  eval::ConfusionMatrix pooled(k, w.corpus.label_names);
  for (std::size_t r = 0; r < c.rounds; ++r) {
    const data::Round round = w.plan.round(r);
    const auto normalizer = acoustic::fit_normalizer(features, round.train);
    const auto train = acoustic::make_examples(w.corpus, features, round.train, normalizer);
    const auto val = acoustic::make_examples(w.corpus, features, round.validation, normalizer);
    nn::Rng init(c.seed * 104729ULL + r);
    acoustic::AcousticModel model(c.lstm, init);
    const auto trained = acoustic::train_acoustic(std::move(model), train, val,
                                                  train_config(c, c.lstm.batch_size, r, 2));
    for (const auto& rec : trained.log) {
      json line = nn::to_json(rec);
      line["round"] = r;
      log_lines += line.dump() + "\n";
    }
    io::save_checkpoint(c.out / "checkpoints" / ("lstm_round" + std::to_string(r) + ".ckpt"),
                        io::serialize_checkpoint(trained.model, normalizer));

    for (const SplitPositions sp : {SplitPositions{fusion::Split::train, &round.train},
                                    SplitPositions{fusion::Split::validation, &round.validation},
                                    SplitPositions{fusion::Split::test, &round.test}}) {
      for (std::size_t i : *sp.positions) {
        const auto& u = w.corpus.utterances[i];
        auto posteriors = acoustic::acoustic_predict(trained.model, normalizer.apply(features[i]));
        if (sp.split == fusion::Split::test) pooled.add(u.label, nn::argmax(posteriors));
        scores.add({r, sp.split, u.id, "lstm", u.label, std::move(posteriors)});
      }
    }
  }
  scores.save(c.out / "scores.jsonl");
  write_text(c.out / "epoch_log.jsonl", log_lines);
  eval::ResultTable table{w.corpus.label_names, {eval::summarize("lstm", pooled)}, c.report_wa};
  write_results(c, table);
  log_run(c.out, "train-acoustic finished");
  out << table.to_text();
  return 0;
}

int cmd_train_evector(RunConfig& c, std::ostream& out) {
  Workspace w = prepare_workspace(c);
  begin_outputs(c, w, "train-evector");
  fs::create_directories(c.out / "tables");
  const std::size_t k = w.corpus.num_classes();

  fusion::ScoreSet scores;
  for (std::size_t r = 0; r < c.rounds; ++r) {
    const data::Round round = w.plan.round(r);
    std::vector<evector::LabeledTokens> training;
    for (std::size_t i : round.train) {
      training.push_back({&w.corpus.utterances[i].tokens, w.corpus.utterances[i].label});
    }
    const auto table = evector::fit_word_weights(training, k, c.evector_alpha);
    table.save(c.out / "tables" / ("evector_round" + std::to_string(r) + ".jsonl"));
    for (const SplitPositions sp : {SplitPositions{fusion::Split::train, &round.train},
                                    SplitPositions{fusion::Split::validation, &round.validation},
                                    SplitPositions{fusion::Split::test, &round.test}}) {
      for (std::size_t i : *sp.positions) {
        const auto& u = w.corpus.utterances[i];
        scores.add({r, sp.split, u.id, "evector", u.label, evector::evector(u.tokens, table)});
      }
    }
  }
  scores.save(c.out / "scores.jsonl");
  // The e-vector system's decisions come from the SVM over the e-vectors.
  auto result = fusion::run_fusion_experiment(scores, {fusion::parse_combination("evector")},
                                              w.corpus.label_names, c.svm);
  result.table.show_wa = c.report_wa;
  write_results(c, result.table);
  log_run(c.out, "train-evector finished");
  out << result.table.to_text();
  return 0;
}

std::vector<std::string> split_combinations(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == ';' || ch == ',') {
      if (!current.empty()) out.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

int cmd_fuse(const std::optional<fs::path>& config_path, const std::vector<std::string>& score_dirs,
             const std::optional<std::string>& combinations_flag, const Overrides& overrides,
             std::ostream& out) {
  // Fusion needs only score directories; the run config is optional and
  // contributes SVM settings, combinations, seed and output directory.
  fusion::SvmConfig svm;
  std::vector<std::string> combos;
  bool report_wa = true;
  std::optional<fs::path> out_dir;
  std::uint64_t seed = overrides.seed.value_or(1);
  if (config_path) {
    const json j = read_json(*config_path);
    if (j.contains("svm")) {
      svm.c_reg = get_field<double>(j.at("svm"), "c_reg", svm.c_reg);
      svm.epochs = get_field<std::size_t>(j.at("svm"), "epochs", svm.epochs);
    }
    combos = get_field<std::vector<std::string>>(j, "combinations", {});
    report_wa = get_field<bool>(j, "report_wa", true);
    if (!overrides.seed) seed = get_field<std::uint64_t>(j, "seed", 1);
    if (j.contains("out")) {
      fs::path p = get_field<std::string>(j, "out", "");
      out_dir = p.is_absolute() ? p : config_path->parent_path() / p;
    }
  }
  if (overrides.out) out_dir = fs::path(*overrides.out);
  if (combinations_flag) combos = split_combinations(*combinations_flag);
  if (combos.empty()) throw ConfigError("no fusion combinations given");
  if (!out_dir) throw ConfigError("no output directory: give --out or an 'out' field");
  if (score_dirs.empty()) throw ConfigError("no score directories given");
  if (!(svm.c_reg > 0.0) || svm.epochs == 0) throw ConfigError("invalid svm settings");
  svm.seed = seed;
  std::vector<fusion::Combination> parsed;
  for (const auto& text : combos) parsed.push_back(fusion::parse_combination(text));

  fusion::ScoreSet scores;
  std::optional<std::vector<std::string>> labels;
  for (const auto& dir : score_dirs) {
    const auto these = read_json(fs::path(dir) / "labels.json").at("labels").get<std::vector<std::string>>();
    if (labels && *labels != these) throw FormatError("score directories disagree on labels");
    labels = these;
    scores.merge(fusion::ScoreSet::load(fs::path(dir) / "scores.jsonl"));
  }
  auto result = fusion::run_fusion_experiment(scores, parsed, *labels, svm);
  result.table.show_wa = report_wa;

  fs::create_directories(*out_dir);
  write_text(*out_dir / "fusion_results.txt", result.table.to_text());
  json audits = json::array();
  for (const auto& a : result.audits) {
    audits.push_back({{"round", a.round},
                      {"train", a.train_count},
                      {"test", a.test_count},
                      {"overlap", a.overlap}});
  }
  json j = result.table.to_json();
  j["fold_audit"] = audits;
  j["svm"] = {{"c_reg", svm.c_reg}, {"epochs", svm.epochs}, {"seed", svm.seed}};
  write_json(*out_dir / "fusion_results.json", j);
  log_run(*out_dir, "fuse finished");
  out << result.table.to_text();
  return 0;
}

int cmd_sweep(RunConfig& c, std::size_t max_modules, std::ostream& out) {
  if (max_modules == 0) throw ConfigError("--max-modules must be positive");
  Workspace w = prepare_workspace(c);
  begin_outputs(c, w, "sweep-modules");
  const auto rows = text::sweep_modules(w.corpus, w.plan, max_modules, c.mcnn, c.kernel_step,
                                        c.sweep_rounds,
                                        train_config(c, c.batch_size.value_or(40), 0, 3));
  std::string textual = "modules  kernels                 UA       WA\n";
  json j = json::array();
  char buf[160];
  for (const auto& r : rows) {
    std::string kernels;
    for (std::size_t s : r.kernel_sizes) kernels += (kernels.empty() ? "" : ",") + std::to_string(s);
    std::snprintf(buf, sizeof(buf), "%7zu  %-20s  %6.2f  %6.2f\n", r.num_modules, kernels.c_str(),
                  100.0 * r.ua, 100.0 * r.wa);
    textual += buf;
    j.push_back({{"num_modules", r.num_modules},
                 {"kernel_sizes", r.kernel_sizes},
                 {"ua", r.ua},
                 {"wa", r.wa}});
  }
  write_text(c.out / "sweep.txt", textual);
  write_json(c.out / "sweep.json", j);
  log_run(c.out, "sweep-modules finished");
  out << textual;
  return 0;
}

int cmd_evaluate(const fs::path& scores_path, const std::optional<std::string>& system,
                 const std::optional<std::string>& manifest, const std::optional<std::string>& out_dir,
                 std::ostream& out) {
  fusion::ScoreSet scores = fusion::ScoreSet::load(scores_path);
  const auto systems = scores.systems();
  if (systems.empty()) throw CoverageError("score file is empty");
  std::string name;
  if (system) {
    name = *system;
  } else if (systems.size() == 1) {
    name = systems.front();
  } else {
    throw ConfigError("score file holds several systems; choose one with --system");
  }

  std::vector<std::string> labels;
  if (manifest) {
    // Labels from the manifest replace those stored with the scores.
    const data::Corpus corpus = data::load_corpus(*manifest);
    labels = corpus.label_names;
    std::unordered_map<std::string, std::size_t> truth;
    for (const auto& u : corpus.utterances) truth[u.id] = u.label;
    fusion::ScoreSet relabeled;
    for (auto line : scores.lines()) {
      const auto it = truth.find(line.id);
      if (it == truth.end()) throw CoverageError("utterance " + line.id + " not in manifest");
      line.label = it->second;
      relabeled.add(std::move(line));
    }
    scores = std::move(relabeled);
  } else {
    const fs::path labels_file = scores_path.parent_path() / "labels.json";
    if (fs::exists(labels_file)) {
      labels = read_json(labels_file).at("labels").get<std::vector<std::string>>();
    } else {
      std::size_t k = 0;
      for (const auto& l : scores.lines()) {
        if (l.system == name) k = std::max(k, l.vector.size());
      }
      for (std::size_t i = 0; i < k; ++i) labels.push_back("class" + std::to_string(i));
    }
  }
  const auto cm = fusion::argmax_confusion(scores, name, labels);
  eval::ResultTable table{labels, {eval::summarize(name, cm)}, true};
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text(fs::path(*out_dir) / "metrics.txt", table.to_text());
    write_json(fs::path(*out_dir) / "metrics.json", table.to_json());
  }
  out << table.to_text();
  return 0;
}

RunConfig load_run_config(const std::string& path, const Overrides& overrides) {
  const fs::path p(path);
  return parse_run_config(read_json(p), p.parent_path(), overrides);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Emotion recognition from transcripts and acoustic features", "emorec"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> preset;
  std::optional<std::string> combinations;
  std::vector<std::string> score_dirs;
  std::string scores_file;
  std::optional<std::string> system;
  std::optional<std::string> manifest;
  std::size_t max_modules = 10;

  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic corpus");
  synth->add_option("--config", config, "Synthetic spec (JSON)")->required();
  synth->add_option("--seed", seed, "Generator seed");
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Run configuration (JSON)")->required();
    cmd->add_option("--seed", seed, "Seed override");
    cmd->add_option("--out", out_dir, "Output directory override");
    cmd->add_option("--preset", preset, "Model preset: iemocap, callcenter or explicit");
  };
  auto* train_text = app.add_subcommand("train-text", "Train the multi-resolution CNN");
  add_run_options(train_text);
  auto* train_acoustic = app.add_subcommand("train-acoustic", "Train the acoustic LSTM");
  add_run_options(train_acoustic);
  auto* train_evector = app.add_subcommand("train-evector", "Fit e-vector word weights");
  add_run_options(train_evector);
  auto* sweep = app.add_subcommand("sweep-modules", "Accuracy versus number of CNN modules");
  add_run_options(sweep);
  sweep->add_option("--max-modules", max_modules, "Largest module count");

  auto* fuse = app.add_subcommand("fuse", "SVM late fusion of system scores");
  fuse->add_option("--config", config, "Run configuration (JSON)");
  fuse->add_option("--scores", score_dirs, "Score directory from a train-* command")->required();
  fuse->add_option("--combinations", combinations,
                   "Combinations separated by ';', systems joined by '+'");
  fuse->add_option("--seed", seed, "Seed override");
  fuse->add_option("--out", out_dir, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics of a system's own decisions");
  evaluate->add_option("--scores", scores_file, "scores.jsonl file")->required();
  evaluate->add_option("--system", system, "System name");
  evaluate->add_option("--manifest", manifest, "Manifest supplying labels");
  evaluate->add_option("--out", out_dir, "Directory for metrics files");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage_error: " << e.what() << '\n';
    return 2;
  }

  try {
    const Overrides overrides{seed, out_dir, preset};
    if (synth->parsed()) return cmd_synth(config, seed, *out_dir, out);
    if (fuse->parsed()) {
      std::optional<fs::path> cfg;
      if (!config.empty()) cfg = config;
      return cmd_fuse(cfg, score_dirs, combinations, overrides, out);
    }
    if (evaluate->parsed()) return cmd_evaluate(scores_file, system, manifest, out_dir, out);
    RunConfig rc = load_run_config(config, overrides);
    if (train_text->parsed()) return cmd_train_text(rc, out);
    if (train_acoustic->parsed()) return cmd_train_acoustic(rc, out);
    if (train_evector->parsed()) return cmd_train_evector(rc, out);
    if (sweep->parsed()) return cmd_sweep(rc, max_modules, out);
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal_error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace emorec::cli
