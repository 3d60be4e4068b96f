#include "emorec/data/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "emorec/error.hpp"
#include "emorec/text/tokenizer.hpp"

namespace emorec::data {

using nlohmann::json;

std::vector<std::size_t> Corpus::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& u : utterances) ++counts.at(u.label);
  return counts;
}

std::filesystem::path Corpus::feature_file(const Utterance& u) const {
  if (!u.feature_path) throw CoverageError("utterance " + u.id + " has no acoustic features");
  const std::filesystem::path p(*u.feature_path);
  return p.is_absolute() ? p : base_dir / p;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  Corpus out;
  out.label_names = label_names;
  out.base_dir = base_dir;
  out.utterances.reserve(indices.size());
  for (std::size_t i : indices) out.utterances.push_back(utterances.at(i));
  return out;
}

namespace {

std::string require_string(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw FormatError("manifest line " + std::to_string(line) + ": missing string field '" +
                      key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());

  Corpus corpus;
  corpus.base_dir = manifest.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("labels") || !j["labels"].is_array() || j["labels"].size() < 2) {
        throw FormatError("manifest header must list at least two labels");
      }
      for (const auto& name : j["labels"]) corpus.label_names.push_back(name.get<std::string>());
      if (std::set<std::string>(corpus.label_names.begin(), corpus.label_names.end()).size() !=
          corpus.label_names.size()) {
        throw FormatError("manifest header repeats a label name");
      }
      have_header = true;
      continue;
    }
    Utterance u;
    u.id = require_string(j, "id", line_no);
    u.speaker = require_string(j, "speaker", line_no);
    const std::string label = require_string(j, "label", line_no);
    const auto it = std::ranges::find(corpus.label_names, label);
    if (it == corpus.label_names.end()) {
      throw FormatError("manifest line " + std::to_string(line_no) + ": unknown label '" + label +
                        "'");
    }
    u.label = static_cast<std::size_t>(it - corpus.label_names.begin());
    u.transcript = require_string(j, "transcript", line_no);
    u.tokens = text::tokenize(u.transcript);
    if (j.contains("features") && !j["features"].is_null()) {
      u.feature_path = j["features"].get<std::string>();
    }
    if (!seen.insert(u.id).second) throw FormatError("duplicate utterance id '" + u.id + "'");
    corpus.utterances.push_back(std::move(u));
  }
  if (!have_header) throw FormatError("manifest " + manifest.string() + " is empty");
  return corpus;
}

void write_manifest(const Corpus& corpus, const std::filesystem::path& manifest) {
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + manifest.string());
  out << json{{"labels", corpus.label_names}}.dump() << '\n';
  for (const auto& u : corpus.utterances) {
    json j{{"id", u.id},
           {"speaker", u.speaker},
           {"label", corpus.label_names.at(u.label)},
           {"transcript", u.transcript}};
    if (u.feature_path) j["features"] = *u.feature_path;
    out << j.dump() << '\n';
  }
}

Corpus balance_classes(const Corpus& corpus, nn::Rng& rng) {
  const std::size_t k = corpus.num_classes();
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < corpus.size(); ++i) by_class.at(corpus.utterances[i].label).push_back(i);
  std::size_t target = corpus.size();
  for (std::size_t c = 0; c < k; ++c) {
    if (by_class[c].empty()) {
      throw DegenerateDataError("class '" + corpus.label_names[c] + "' has no utterances");
    }
    target = std::min(target, by_class[c].size());
  }
  std::vector<std::size_t> keep;
  for (auto& members : by_class) {
    if (members.size() > target) {
      rng.shuffle(std::span(members));
      members.resize(target);
    }
    keep.insert(keep.end(), members.begin(), members.end());
  }
  std::ranges::sort(keep);
  return corpus.subset(keep);
}

}  // namespace emorec::data
