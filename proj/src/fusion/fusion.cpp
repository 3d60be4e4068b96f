#include "emorec/fusion/fusion.hpp"

#include <algorithm>
#include <set>

#include "emorec/error.hpp"
#include "emorec/nn/layers.hpp"

namespace emorec::fusion {

Vector concat_scores(const ScoreRecord& record) {
  if (record.blocks.empty()) throw ShapeError("score record " + record.id + " has no blocks");
  Vector out;
  for (const auto& b : record.blocks) out.insert(out.end(), b.values.begin(), b.values.end());
  return out;
}

std::vector<Vector> concat_all(std::span<const ScoreRecord> records) {
  std::vector<Vector> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& first = records.front();
    if (r.blocks.size() != first.blocks.size()) {
      throw ShapeError("score record " + r.id + " has a different number of blocks");
    }
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
      if (r.blocks[b].system != first.blocks[b].system ||
          r.blocks[b].values.size() != first.blocks[b].values.size()) {
        throw ShapeError("score record " + r.id + " block " + std::to_string(b) +
                         " does not match the first record");
      }
    }
    out.push_back(concat_scores(r));
  }
  return out;
}

std::string Combination::name() const {
  std::string out;
  for (const auto& s : systems) {
    if (!out.empty()) out += " + ";
    out += s;
  }
  return out;
}

Combination parse_combination(const std::string& text) {
  Combination c;
  std::string current;
  auto flush = [&] {
    if (current.empty()) throw ConfigError("empty system name in combination '" + text + "'");
    c.systems.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    if (ch == '+') {
      flush();
    } else if (ch != ' ' && ch != '\t') {
      current.push_back(ch);
    }
  }
  flush();
  if (std::set<std::string>(c.systems.begin(), c.systems.end()).size() != c.systems.size()) {
    throw ConfigError("combination '" + text + "' repeats a system");
  }
  return c;
}

std::vector<ScoreRecord> gather_records(const ScoreSet& scores, const Combination& combination,
                                        std::size_t round, Split split) {
  if (combination.systems.empty()) throw ConfigError("empty combination");
  const std::string& lead = combination.systems.front();
  std::vector<ScoreRecord> records;
  for (const auto& id : scores.ids(lead, round, split)) {
    ScoreRecord record;
    record.id = id;
    for (const auto& system : combination.systems) {
      const ScoreLine* line = scores.find(system, round, split, id);
      if (line == nullptr) {
        throw CoverageError("system '" + system + "' has no " + std::string(to_string(split)) +
                            " score for " + id + " in round " + std::to_string(round));
      }
      if (record.label && *record.label != line->label) {
        throw FormatError("systems disagree on the label of " + id);
      }
      record.label = line->label;
      record.blocks.push_back({system, line->vector});
    }
    records.push_back(std::move(record));
  }
  // Every system must cover the same utterances as the lead system.
  for (const auto& system : combination.systems) {
    if (scores.ids(system, round, split).size() != records.size()) {
      throw CoverageError("system '" + system + "' scores a different set of utterances than '" +
                          lead + "' in round " + std::to_string(round));
    }
  }
  return records;
}

FusionResult run_fusion_experiment(const ScoreSet& scores,
                                   const std::vector<Combination>& combinations,
                                   const std::vector<std::string>& class_names,
                                   const SvmConfig& config) {
  const std::size_t k = class_names.size();
  const auto rounds = scores.rounds();
  if (rounds.empty()) throw CoverageError("score set is empty");
  const auto known = scores.systems();
  for (const auto& combo : combinations) {
    for (const auto& s : combo.systems) {
      if (std::ranges::find(known, s) == known.end()) {
        throw CoverageError("no scores for system '" + s + "'");
      }
    }
  }

  FusionResult result;
  result.table.class_names = class_names;
  bool audited = false;
  for (const auto& combo : combinations) {
    FusionRow row{combo, eval::ConfusionMatrix(k, class_names), {}};
    for (std::size_t r : rounds) {
      const auto train = gather_records(scores, combo, r, Split::train);
      const auto test = gather_records(scores, combo, r, Split::test);
      if (test.empty()) throw CoverageError("round " + std::to_string(r) + " has no test scores");

      std::set<std::string> train_ids;
      for (const auto& rec : train) train_ids.insert(rec.id);
      RoundAudit audit{r, train.size(), test.size(), 0};
      for (const auto& rec : test) audit.overlap += train_ids.count(rec.id);
      if (audit.overlap != 0) {
        throw PreconditionError("round " + std::to_string(r) + ": " +
                                std::to_string(audit.overlap) +
                                " test utterances also appear in the SVM training set");
      }
      if (!audited) result.audits.push_back(audit);

      const auto train_x = concat_all(train);
      std::vector<std::size_t> train_y;
      for (const auto& rec : train) train_y.push_back(*rec.label);
      SvmConfig round_config = config;
      round_config.seed = config.seed + r;
      const LinearSvmModel svm = svm_fit(train_x, train_y, k, round_config);

      eval::ConfusionMatrix cm(k, class_names);
      for (const auto& rec : test) cm.add(*rec.label, svm_predict(svm, concat_scores(rec)).label);
      row.pooled += cm;
      row.per_round.push_back(std::move(cm));
    }
    audited = true;
    result.table.rows.push_back(eval::summarize(combo.name(), row.pooled));
    result.rows.push_back(std::move(row));
  }
  return result;
}

eval::ConfusionMatrix argmax_confusion(const ScoreSet& scores, const std::string& system,
                                       const std::vector<std::string>& class_names) {
  eval::ConfusionMatrix cm(class_names.size(), class_names);
  bool any = false;
  for (const auto& line : scores.lines()) {
    if (line.system != system || line.split != Split::test) continue;
    if (line.vector.size() != class_names.size()) {
      throw ShapeError("system '" + system + "' scores are not per-class vectors");
    }
    cm.add(line.label, nn::argmax(line.vector));
    any = true;
  }
  if (!any) throw CoverageError("no test scores for system '" + system + "'");
  return cm;
}

}  // namespace emorec::fusion
