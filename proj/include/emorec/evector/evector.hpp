#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::evector {

using nn::Vector;

/// Per-word emotion-inclination weights: the Laplace-smoothed class posterior
/// (count(w, c) + alpha) / (count(w) + alpha * D) for every training word.
class WordWeightTable {
 public:
  WordWeightTable() = default;
  WordWeightTable(std::size_t num_classes, double alpha, std::map<std::string, Vector> weights);

  std::size_t num_classes() const noexcept { return num_classes_; }
  double alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::map<std::string, Vector>& weights() const noexcept { return weights_; }
  /// nullptr for a word not seen in training.
  const Vector* find(const std::string& word) const;

  /// FNV-1a over the serialized table; used to audit for leakage.
  std::uint64_t fingerprint() const;

  std::string serialize() const;
  static WordWeightTable deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static WordWeightTable load(const std::filesystem::path& path);

  friend bool operator==(const WordWeightTable&, const WordWeightTable&) = default;

 private:
  std::size_t num_classes_ = 0;
  double alpha_ = 1.0;
  std::map<std::string, Vector> weights_;
};

struct LabeledTokens {
  const std::vector<std::string>* tokens;
  std::size_t label;
};

WordWeightTable fit_word_weights(const std::vector<LabeledTokens>& training,
                                 std::size_t num_classes, double alpha = 1.0);

/// Mean of the words' weight vectors; unseen words count as the uniform
/// vector, and an empty utterance maps to the uniform vector.
Vector evector(const std::vector<std::string>& tokens, const WordWeightTable& table);

}  // namespace emorec::evector
