#include "emorec/evector/evector.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emorec/error.hpp"

namespace emorec::evector {

using nlohmann::json;

WordWeightTable::WordWeightTable(std::size_t num_classes, double alpha,
                                 std::map<std::string, Vector> weights)
    : num_classes_(num_classes), alpha_(alpha), weights_(std::move(weights)) {
  for (const auto& [word, w] : weights_) {
    if (w.size() != num_classes_) throw ShapeError("weight vector for '" + word + "' has wrong size");
  }
}

const Vector* WordWeightTable::find(const std::string& word) const {
  const auto it = weights_.find(word);
  return it == weights_.end() ? nullptr : &it->second;
}

std::uint64_t WordWeightTable::fingerprint() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : serialize()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string WordWeightTable::serialize() const {
  std::string out = json{{"classes", num_classes_}, {"alpha", alpha_}}.dump() + '\n';
  for (const auto& [word, w] : weights_) {
    out += json{{"word", word}, {"weights", w}}.dump();
    out += '\n';
  }
  return out;
}

WordWeightTable WordWeightTable::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t classes = 0;
  double alpha = 0.0;
  bool have_header = false;
  std::map<std::string, Vector> weights;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!have_header) {
        classes = j.at("classes").get<std::size_t>();
        alpha = j.at("alpha").get<double>();
        have_header = true;
        continue;
      }
      auto word = j.at("word").get<std::string>();
      if (!weights.emplace(word, j.at("weights").get<Vector>()).second) {
        throw FormatError("duplicate word '" + word + "' in weight table");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("weight table: ") + e.what());
  }
  if (!have_header) throw FormatError("weight table is empty");
  return WordWeightTable(classes, alpha, std::move(weights));
}

void WordWeightTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize();
}

WordWeightTable WordWeightTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

WordWeightTable fit_word_weights(const std::vector<LabeledTokens>& training,
                                 std::size_t num_classes, double alpha) {
  if (training.empty()) throw PreconditionError("e-vector fit on an empty training set");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (!(alpha > 0.0)) throw ConfigError("smoothing alpha must be positive");

  std::map<std::string, std::vector<double>> counts;
  for (const auto& ex : training) {
    if (ex.label >= num_classes) throw IndexError("e-vector training label out of range");
    for (const auto& word : *ex.tokens) {
      auto& c = counts[word];
      if (c.empty()) c.assign(num_classes, 0.0);
      c[ex.label] += 1.0;
    }
  }
  std::map<std::string, Vector> weights;
  const double d = static_cast<double>(num_classes);
  for (auto& [word, c] : counts) {
    double total = 0.0;
    for (double n : c) total += n;
    Vector w(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) w[k] = (c[k] + alpha) / (total + alpha * d);
    weights.emplace(word, std::move(w));
  }
  return WordWeightTable(num_classes, alpha, std::move(weights));
}

Vector evector(const std::vector<std::string>& tokens, const WordWeightTable& table) {
  const std::size_t d = table.num_classes();
  const double uniform = 1.0 / static_cast<double>(d);
  if (tokens.empty()) return Vector(d, uniform);
  Vector sum(d, 0.0);
  for (const auto& word : tokens) {
    const Vector* w = table.find(word);
    for (std::size_t k = 0; k < d; ++k) sum[k] += w != nullptr ? (*w)[k] : uniform;
  }
  const double n = static_cast<double>(tokens.size());
  for (double& x : sum) x /= n;
  return sum;
}

}  // namespace emorec::evector
