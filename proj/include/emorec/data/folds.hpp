#pragma once

#include <cstddef>
#include <vector>

#include "emorec/data/corpus.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::data {

/// Utterance positions (into Corpus::utterances) for one evaluation round.
struct Round {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Speaker-disjoint partition of a corpus into k folds. Round r tests on
/// fold r, validates on fold (r+1) mod k and trains on the rest.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;

  std::size_t num_folds() const noexcept { return folds.size(); }
  Round round(std::size_t r) const;
  /// Fold holding each utterance position.
  std::vector<std::size_t> fold_of(std::size_t corpus_size) const;
};

/// Greedy balancing: speakers in descending utterance count (ties broken by
/// a seeded shuffle) each go to the currently lightest fold.
FoldPlan make_folds(const Corpus& corpus, std::size_t k, nn::Rng& rng);

/// Speakers occurring in more than one fold; empty for a valid plan.
std::vector<std::string> speaker_overlap(const Corpus& corpus, const FoldPlan& plan);

}  // namespace emorec::data
