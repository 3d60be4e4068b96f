#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emorec/eval/metrics.hpp"
#include "emorec/fusion/scores.hpp"
#include "emorec/fusion/svm.hpp"

namespace emorec::fusion {

struct ScoreBlock {
  std::string system;
  Vector values;
};

/// Named score blocks for one utterance, in declared order.
struct ScoreRecord {
  std::string id;
  std::vector<ScoreBlock> blocks;
  std::optional<std::size_t> label;
};

Vector concat_scores(const ScoreRecord& record);
/// Concatenates every record after checking that block names, order and
/// dimensions agree across the set.
std::vector<Vector> concat_all(std::span<const ScoreRecord> records);

/// Ordered list of systems whose scores are concatenated.
struct Combination {
  std::vector<std::string> systems;

  /// "mcnn + lstm"
  std::string name() const;
};

/// Parses "mcnn+lstm" (whitespace ignored).
Combination parse_combination(const std::string& text);

/// Training/test records for one round, built from the score set.
std::vector<ScoreRecord> gather_records(const ScoreSet& scores, const Combination& combination,
                                        std::size_t round, Split split);

struct RoundAudit {
  std::size_t round = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t overlap = 0;  // ids present in both train and test; must be 0
};

struct FusionRow {
  Combination combination;
  eval::ConfusionMatrix pooled;
  std::vector<eval::ConfusionMatrix> per_round;
};

struct FusionResult {
  eval::ResultTable table;
  std::vector<FusionRow> rows;
  std::vector<RoundAudit> audits;
};

/// For each combination and round: fit the SVM on the round's training-split
/// scores, predict its test split, and pool confusion matrices over rounds.
/// Throws CoverageError if any system lacks a score the first system has,
/// and PreconditionError if a round's train and test ids overlap.
FusionResult run_fusion_experiment(const ScoreSet& scores,
                                   const std::vector<Combination>& combinations,
                                   const std::vector<std::string>& class_names,
                                   const SvmConfig& config = {});

/// Pooled test-split confusion of a system's own argmax decisions.
eval::ConfusionMatrix argmax_confusion(const ScoreSet& scores, const std::string& system,
                                       const std::vector<std::string>& class_names);

}  // namespace emorec::fusion
