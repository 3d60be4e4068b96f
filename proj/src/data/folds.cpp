#include "emorec/data/folds.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "emorec/error.hpp"

namespace emorec::data {

Round FoldPlan::round(std::size_t r) const {
  const std::size_t k = folds.size();
  if (r >= k) throw IndexError("round " + std::to_string(r) + " of " + std::to_string(k));
  Round out;
  out.test = folds[r];
  out.validation = folds[(r + 1) % k];
  for (std::size_t f = 0; f < k; ++f) {
    if (f == r || f == (r + 1) % k) continue;
    out.train.insert(out.train.end(), folds[f].begin(), folds[f].end());
  }
  std::ranges::sort(out.train);
  return out;
}

std::vector<std::size_t> FoldPlan::fold_of(std::size_t corpus_size) const {
  std::vector<std::size_t> owner(corpus_size, folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t i : folds[f]) owner.at(i) = f;
  }
  return owner;
}

FoldPlan make_folds(const Corpus& corpus, std::size_t k, nn::Rng& rng) {
  if (k < 3) throw ConfigError("need at least 3 folds (test, validation, train)");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    by_speaker[corpus.utterances[i].speaker].push_back(i);
  }
  if (by_speaker.size() < k) {
    throw ConfigError("cannot form " + std::to_string(k) + " speaker-disjoint folds from " +
                      std::to_string(by_speaker.size()) + " speakers");
  }

  std::vector<const std::vector<std::size_t>*> speakers;
  for (const auto& [name, members] : by_speaker) speakers.push_back(&members);
  rng.shuffle(std::span(speakers));
  std::ranges::stable_sort(speakers, [](const auto* a, const auto* b) { return a->size() > b->size(); });

  FoldPlan plan;
  plan.folds.resize(k);
  for (const auto* members : speakers) {
    // Lightest fold; ties go to the lowest index. Empty folds are filled first
    // so every fold receives at least one speaker.
    std::size_t best = 0;
    for (std::size_t f = 1; f < k; ++f) {
      if (plan.folds[f].size() < plan.folds[best].size()) best = f;
    }
    plan.folds[best].insert(plan.folds[best].end(), members->begin(), members->end());
  }
  for (auto& fold : plan.folds) std::ranges::sort(fold);
  return plan;
}

std::vector<std::string> speaker_overlap(const Corpus& corpus, const FoldPlan& plan) {
  std::map<std::string, std::set<std::size_t>> folds_of_speaker;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    for (std::size_t i : plan.folds[f]) folds_of_speaker[corpus.utterances.at(i).speaker].insert(f);
  }
  std::vector<std::string> shared;
  for (const auto& [speaker, folds] : folds_of_speaker) {
    if (folds.size() > 1) shared.push_back(speaker);
  }
  return shared;
}

}  // namespace emorec::data
