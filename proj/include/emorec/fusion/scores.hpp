#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::fusion {

using nn::Vector;

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// One system's score vector for one utterance in one evaluation round.
struct ScoreLine {
  std::size_t round = 0;
  Split split = Split::test;
  std::string id;
  std::string system;
  std::size_t label = 0;
  Vector vector;
};

/// Score lines indexed by (system, round, split, id). Serialized as JSON
/// lines: {"round", "split", "id", "system", "label", "vector"}.
class ScoreSet {
 public:
  void add(ScoreLine line);
  void merge(const ScoreSet& other);

  const std::vector<ScoreLine>& lines() const noexcept { return lines_; }
  std::vector<std::string> systems() const;
  std::vector<std::size_t> rounds() const;
  const ScoreLine* find(std::string_view system, std::size_t round, Split split,
                        std::string_view id) const;
  /// Ids for (system, round, split) in file order.
  std::vector<std::string> ids(std::string_view system, std::size_t round, Split split) const;

  void save(const std::filesystem::path& path) const;
  static ScoreSet load(const std::filesystem::path& path);

 private:
  using Key = std::tuple<std::string, std::size_t, Split, std::string>;
  std::vector<ScoreLine> lines_;
  std::map<Key, std::size_t> index_;
};

}  // namespace emorec::fusion
