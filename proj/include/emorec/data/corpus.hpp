#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emorec/nn/rng.hpp"

namespace emorec::data {

struct Utterance {
  std::string id;
  std::string speaker;
  std::size_t label = 0;
  std::string transcript;
  std::vector<std::string> tokens;
  /// Path of the frame-feature CSV, relative to the corpus base directory.
  std::optional<std::string> feature_path;
};

struct Corpus {
  std::vector<std::string> label_names;
  std::vector<Utterance> utterances;
  std::filesystem::path base_dir;

  std::size_t num_classes() const noexcept { return label_names.size(); }
  std::size_t size() const noexcept { return utterances.size(); }
  std::vector<std::size_t> class_counts() const;
  std::filesystem::path feature_file(const Utterance& u) const;

  /// Rebuilds the corpus from a subset of utterance positions.
  Corpus subset(std::span<const std::size_t> indices) const;
};

/// Reads a JSON-lines manifest. The first line is {"labels": [...]}; every
/// following line is {"id", "speaker", "label", "transcript"[, "features"]}.
/// Transcripts are tokenized on load.
Corpus load_corpus(const std::filesystem::path& manifest);
void write_manifest(const Corpus& corpus, const std::filesystem::path& manifest);

/// Downsamples every class without replacement to the size of the smallest
/// class. Kept utterances retain their original relative order.
Corpus balance_classes(const Corpus& corpus, nn::Rng& rng);

}  // namespace emorec::data
