#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "emorec/data/corpus.hpp"
#include "emorec/nn/matrix.hpp"
#include "emorec/nn/rng.hpp"

namespace emorec::data {

/// Parameters of the synthetic paired text/acoustic corpus.
///
/// Each class has a text signature and an acoustic signature. Classes that
/// share a group id in `text_groups` (resp. `acoustic_groups`) share the
/// same signature and are indistinguishable in that modality; empty group
/// lists mean one signature per class.
struct SynthSpec {
  std::vector<std::string> class_names{"angry", "happy", "sad", "neutral"};
  std::vector<std::size_t> class_counts{200, 200, 200, 200};
  std::size_t num_speakers = 25;
  /// Speaker draw weight is (s+1)^-skew; 0 gives uniform speakers.
  double speaker_skew = 0.0;
  std::size_t class_vocab = 20;
  std::size_t shared_vocab = 60;
  double text_signal = 1.0;
  double acoustic_signal = 1.0;
  double mean_length = 11.56;
  std::size_t feature_dim = 88;
  double mean_frames = 20.0;
  std::vector<std::size_t> text_groups;
  std::vector<std::size_t> acoustic_groups;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  void validate() const;

  /// "iemocap" (4 classes with the IEMOCAP class-count shape scaled down,
  /// 11.56 tokens per utterance) or "callcenter" (3 classes, 6.73 tokens).
  static SynthSpec preset(std::string_view name);
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

struct SynthCorpus {
  Corpus corpus;
  std::vector<nn::Matrix> features;  // aligned with corpus.utterances
};

SynthCorpus synth_corpus(const SynthSpec& spec, nn::Rng& rng);

/// Writes manifest.jsonl, features/<id>.csv and synth_spec.json (generator parameters
/// plus seed) under `out_dir`.
void write_synth_corpus(const SynthCorpus& synth, const SynthSpec& spec, std::uint64_t seed,
                        const std::filesystem::path& out_dir);

}  // namespace emorec::data
