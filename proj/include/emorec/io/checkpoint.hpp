#pragma once

#include <filesystem>
#include <string>

#include "emorec/acoustic/features.hpp"
#include "emorec/acoustic/model.hpp"
#include "emorec/text/mcnn.hpp"
#include "emorec/text/tokenizer.hpp"

// Checkpoints are plain text:
//
//   emorec-checkpoint 1
//   kind <mcnn|acoustic>
//   config <single-line JSON>
//   block <name> <rows> <cols>
//   <one line per row, values as C hex-float literals>
//   ...
//   end
//
// Hex floats make the round trip bit-exact. Only parameter values are
// stored, not optimizer state.
namespace emorec::io {

struct TextCheckpoint {
  text::McnnModel model;
  text::Vocabulary vocabulary;
};

struct AcousticCheckpoint {
  acoustic::AcousticModel model;
  acoustic::FeatureNormalizer normalizer;
};

std::string serialize_checkpoint(const text::McnnModel& model, const text::Vocabulary& vocab);
std::string serialize_checkpoint(const acoustic::AcousticModel& model,
                                 const acoustic::FeatureNormalizer& normalizer);

TextCheckpoint parse_text_checkpoint(const std::string& content);
AcousticCheckpoint parse_acoustic_checkpoint(const std::string& content);

void save_checkpoint(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace emorec::io
