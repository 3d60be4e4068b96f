#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emorec::text {

/// Lowercases, replaces every byte that is not an ASCII letter, digit or
/// apostrophe with a space, and splits on whitespace.
std::vector<std::string> tokenize(std::string_view raw);

/// Token <-> index map. Index 0 is padding, index 1 is out-of-vocabulary.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;

  Vocabulary();

  /// Builds from (training) token lists. Tokens seen fewer than `min_count`
  /// times map to kUnknown. Order: descending frequency, then lexicographic.
  static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                          std::size_t min_count = 1);
  /// Restores from the index-ordered token list (reserved entries included).
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  int index_of(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  bool contains(std::string_view token) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace emorec::text
