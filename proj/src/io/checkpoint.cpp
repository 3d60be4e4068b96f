#include "emorec/io/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "emorec/error.hpp"

namespace emorec::io {

using nlohmann::json;
using nn::Matrix;

namespace {

constexpr const char* kMagic = "emorec-checkpoint 1";

void write_block(std::string& out, const std::string& name, const Matrix& m) {
  out += "block " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  char buf[40];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%a", row[c]);
      if (c > 0) out += ' ';
      out += buf;
    }
    out += '\n';
  }
}

std::string header(const char* kind, const json& config) {
  return std::string(kMagic) + "\nkind " + kind + "\nconfig " + config.dump() + "\n";
}

struct Parsed {
  std::string kind;
  json config;
  std::map<std::string, Matrix> blocks;
};

Parsed parse(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  Parsed parsed;
  if (!std::getline(in, line) || line != kMagic) throw FormatError("not an emorec checkpoint");
  if (!std::getline(in, line) || line.rfind("kind ", 0) != 0) {
    throw FormatError("checkpoint is missing its kind line");
  }
  parsed.kind = line.substr(5);
  if (!std::getline(in, line) || line.rfind("config ", 0) != 0) {
    throw FormatError("checkpoint is missing its config line");
  }
  try {
    parsed.config = json::parse(line.substr(7));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream head(line);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    if (!(head >> tag >> name >> rows >> cols) || tag != "block") {
      throw FormatError("malformed checkpoint block header '" + line + "'");
    }
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw FormatError("truncated block " + name);
      const char* p = line.c_str();
      for (std::size_t c = 0; c < cols; ++c) {
        char* end = nullptr;
        m(r, c) = std::strtod(p, &end);
        if (end == p) throw FormatError("bad value in block " + name);
        p = end;
      }
    }
    if (!parsed.blocks.emplace(name, std::move(m)).second) {
      throw FormatError("duplicate checkpoint block " + name);
    }
  }
  if (!ended) throw FormatError("checkpoint is missing its end marker");
  return parsed;
}

void restore(const Parsed& parsed, const std::string& name, nn::Parameter& param) {
  const auto it = parsed.blocks.find(name);
  if (it == parsed.blocks.end()) throw FormatError("checkpoint lacks block " + name);
  nn::require_same_shape(param.value, it->second, name.c_str());
  param.value = it->second;
}

}  // namespace

std::string serialize_checkpoint(const text::McnnModel& model, const text::Vocabulary& vocab) {
  if (vocab.size() != model.vocab_size()) {
    throw ShapeError("vocabulary size does not match the embedding table");
  }
  const auto& c = model.config();
  const json config{{"kernel_sizes", c.kernel_sizes}, {"embed_dim", c.embed_dim},
                    {"filters_per_module", c.filters_per_module},
                    {"num_classes", c.num_classes},   {"lambda", c.lambda},
                    {"vocabulary", vocab.tokens()}};
  std::string out = header("mcnn", config);
  write_block(out, "embedding", model.embedding.value);
  for (std::size_t m = 0; m < model.conv_weights.size(); ++m) {
    write_block(out, "conv" + std::to_string(m) + ".weights", model.conv_weights[m].value);
    write_block(out, "conv" + std::to_string(m) + ".bias", model.conv_biases[m].value);
  }
  write_block(out, "output.weights", model.output_weights.value);
  write_block(out, "output.bias", model.output_bias.value);
  out += "end\n";
  return out;
}

std::string serialize_checkpoint(const acoustic::AcousticModel& model,
                                 const acoustic::FeatureNormalizer& normalizer) {
  const auto& c = model.config();
  const json config{{"input_dim", c.input_dim},       {"num_lstm_layers", c.num_lstm_layers},
                    {"units_per_layer", c.units_per_layer}, {"dense_units", c.dense_units},
                    {"num_classes", c.num_classes},   {"dropout_prob", c.dropout_prob},
                    {"batch_size", c.batch_size}};
  std::string out = header("acoustic", config);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const std::string p = "lstm" + std::to_string(l);
    write_block(out, p + ".input", model.layers[l].input.value);
    write_block(out, p + ".recurrent", model.layers[l].recurrent.value);
    write_block(out, p + ".bias", model.layers[l].bias.value);
  }
  write_block(out, "hidden.weights", model.hidden_weights.value);
  write_block(out, "hidden.bias", model.hidden_bias.value);
  write_block(out, "output.weights", model.output_weights.value);
  write_block(out, "output.bias", model.output_bias.value);
  write_block(out, "normalizer.mean", Matrix::row_vector(normalizer.mean()));
  write_block(out, "normalizer.stddev", Matrix::row_vector(normalizer.stddev()));
  out += "end\n";
  return out;
}

TextCheckpoint parse_text_checkpoint(const std::string& content) {
  const Parsed parsed = parse(content);
  if (parsed.kind != "mcnn") throw FormatError("checkpoint kind is " + parsed.kind + ", not mcnn");
  text::McnnConfig config;
  std::vector<std::string> tokens;
  try {
    const json& j = parsed.config;
    config.kernel_sizes = j.at("kernel_sizes").get<std::vector<std::size_t>>();
    config.embed_dim = j.at("embed_dim").get<std::size_t>();
    config.filters_per_module = j.at("filters_per_module").get<std::size_t>();
    config.num_classes = j.at("num_classes").get<std::size_t>();
    config.lambda = j.at("lambda").get<double>();
    tokens = j.at("vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("mcnn checkpoint config: ") + e.what());
  }
  TextCheckpoint out{{}, text::Vocabulary::from_tokens(std::move(tokens))};
  nn::Rng unused(0);
  out.model = text::McnnModel(config, out.vocabulary.size(), unused);
  restore(parsed, "embedding", out.model.embedding);
  for (std::size_t m = 0; m < out.model.conv_weights.size(); ++m) {
    restore(parsed, "conv" + std::to_string(m) + ".weights", out.model.conv_weights[m]);
    restore(parsed, "conv" + std::to_string(m) + ".bias", out.model.conv_biases[m]);
  }
  restore(parsed, "output.weights", out.model.output_weights);
  restore(parsed, "output.bias", out.model.output_bias);
  return out;
}

AcousticCheckpoint parse_acoustic_checkpoint(const std::string& content) {
  const Parsed parsed = parse(content);
  if (parsed.kind != "acoustic") {
    throw FormatError("checkpoint kind is " + parsed.kind + ", not acoustic");
  }
  acoustic::LstmConfig config;
  try {
    const json& j = parsed.config;
    config.input_dim = j.at("input_dim").get<std::size_t>();
    config.num_lstm_layers = j.at("num_lstm_layers").get<std::size_t>();
    config.units_per_layer = j.at("units_per_layer").get<std::size_t>();
    config.dense_units = j.at("dense_units").get<std::size_t>();
    config.num_classes = j.at("num_classes").get<std::size_t>();
    config.dropout_prob = j.at("dropout_prob").get<double>();
    config.batch_size = j.at("batch_size").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("acoustic checkpoint config: ") + e.what());
  }
  nn::Rng unused(0);
  AcousticCheckpoint out{acoustic::AcousticModel(config, unused), {}};
  for (std::size_t l = 0; l < out.model.layers.size(); ++l) {
    const std::string p = "lstm" + std::to_string(l);
    restore(parsed, p + ".input", out.model.layers[l].input);
    restore(parsed, p + ".recurrent", out.model.layers[l].recurrent);
    restore(parsed, p + ".bias", out.model.layers[l].bias);
  }
  restore(parsed, "hidden.weights", out.model.hidden_weights);
  restore(parsed, "hidden.bias", out.model.hidden_bias);
  restore(parsed, "output.weights", out.model.output_weights);
  restore(parsed, "output.bias", out.model.output_bias);
  const auto mean = parsed.blocks.find("normalizer.mean");
  const auto stddev = parsed.blocks.find("normalizer.stddev");
  if (mean == parsed.blocks.end() || stddev == parsed.blocks.end()) {
    throw FormatError("acoustic checkpoint lacks normalizer statistics");
  }
  out.normalizer = acoustic::FeatureNormalizer(mean->second.values(), stddev->second.values());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace emorec::io
