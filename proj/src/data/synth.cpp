#include "emorec/data/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "emorec/acoustic/features.hpp"
#include "emorec/error.hpp"

namespace emorec::data {

using nlohmann::json;

void SynthSpec::validate() const {
  const std::size_t k = num_classes();
  if (k < 2) throw ConfigError("synthetic corpus needs at least two classes");
  if (class_counts.size() != k) throw ConfigError("class_counts must have one entry per class");
  for (std::size_t n : class_counts) {
    if (n == 0) throw ConfigError("every class needs at least one utterance");
  }
  if (num_speakers == 0) throw ConfigError("num_speakers must be positive");
  if (!(speaker_skew >= 0.0)) throw ConfigError("speaker_skew must be >= 0");
  if (class_vocab == 0 || shared_vocab == 0) throw ConfigError("vocabulary sizes must be positive");
  if (!(text_signal >= 0.0 && text_signal <= 1.0)) throw ConfigError("text_signal must be in [0,1]");
  if (!(acoustic_signal >= 0.0 && acoustic_signal <= 1.0)) {
    throw ConfigError("acoustic_signal must be in [0,1]");
  }
  if (!(mean_length > 0.0) || mean_length > 200.0) throw ConfigError("mean_length out of range");
  if (!(mean_frames > 0.0) || mean_frames > 400.0) throw ConfigError("mean_frames out of range");
  if (feature_dim == 0) throw ConfigError("feature_dim must be positive");
  for (const auto* groups : {&text_groups, &acoustic_groups}) {
    if (!groups->empty() && groups->size() != k) {
      throw ConfigError("group lists must have one entry per class");
    }
  }
}

SynthSpec SynthSpec::preset(std::string_view name) {
  SynthSpec spec;
  if (name == "iemocap") {
    // 1103 / 1636 / 1084 / 1708 scaled by 1/10.
    spec.class_counts = {110, 164, 108, 171};
    spec.num_speakers = 10;
    spec.mean_length = 11.56;
    spec.text_signal = 0.5;
    spec.acoustic_signal = 0.3;
  } else if (name == "callcenter") {
    spec.class_names = {"negative", "positive", "neutral"};
    spec.class_counts = {150, 150, 150};
    spec.num_speakers = 30;
    spec.mean_length = 6.73;
    spec.text_signal = 0.5;
    spec.acoustic_signal = 0.3;
  } else {
    throw ConfigError("unknown synthetic preset '" + std::string(name) + "'");
  }
  return spec;
}

json to_json(const SynthSpec& spec) {
  return json{{"class_names", spec.class_names},
              {"class_counts", spec.class_counts},
              {"num_speakers", spec.num_speakers},
              {"speaker_skew", spec.speaker_skew},
              {"class_vocab", spec.class_vocab},
              {"shared_vocab", spec.shared_vocab},
              {"text_signal", spec.text_signal},
              {"acoustic_signal", spec.acoustic_signal},
              {"mean_length", spec.mean_length},
              {"feature_dim", spec.feature_dim},
              {"mean_frames", spec.mean_frames},
              {"text_groups", spec.text_groups},
              {"acoustic_groups", spec.acoustic_groups}};
}

SynthSpec synth_spec_from_json(const json& j) {
  SynthSpec spec = j.contains("preset") ? SynthSpec::preset(j.at("preset").get<std::string>())
                                        : SynthSpec{};
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") continue;
      if (key == "class_names") value.get_to(spec.class_names);
      else if (key == "class_counts") value.get_to(spec.class_counts);
      else if (key == "num_speakers") value.get_to(spec.num_speakers);
      else if (key == "speaker_skew") value.get_to(spec.speaker_skew);
      else if (key == "class_vocab") value.get_to(spec.class_vocab);
      else if (key == "shared_vocab") value.get_to(spec.shared_vocab);
      else if (key == "text_signal") value.get_to(spec.text_signal);
      else if (key == "acoustic_signal") value.get_to(spec.acoustic_signal);
      else if (key == "mean_length") value.get_to(spec.mean_length);
      else if (key == "feature_dim") value.get_to(spec.feature_dim);
      else if (key == "mean_frames") value.get_to(spec.mean_frames);
      else if (key == "text_groups") value.get_to(spec.text_groups);
      else if (key == "acoustic_groups") value.get_to(spec.acoustic_groups);
      else throw ConfigError("unknown synthetic spec field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

namespace {

std::vector<std::size_t> resolve_groups(const std::vector<std::size_t>& groups, std::size_t k) {
  if (groups.empty()) {
    std::vector<std::size_t> identity(k);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    return identity;
  }
  return groups;
}

std::string padded_number(const char* prefix, std::size_t n, int width) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, n);
  return buf;
}

// Four decimals keep CSV files compact; the quantized double is exactly what
// a reader parses back.
double quantize(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

SynthCorpus synth_corpus(const SynthSpec& spec, nn::Rng& rng) {
  spec.validate();
  const std::size_t k = spec.num_classes();
  const auto text_groups = resolve_groups(spec.text_groups, k);
  const auto acoustic_groups = resolve_groups(spec.acoustic_groups, k);

  // Acoustic signature per group: one standard-normal mean vector each.
  std::size_t num_acoustic_groups = 0;
  for (std::size_t g : acoustic_groups) num_acoustic_groups = std::max(num_acoustic_groups, g + 1);
  nn::Rng signature_rng = rng.split();
  std::vector<std::vector<double>> means(num_acoustic_groups, std::vector<double>(spec.feature_dim));
  for (auto& mean : means) {
    for (double& x : mean) x = signature_rng.normal();
  }

  std::vector<double> speaker_weights(spec.num_speakers);
  double weight_total = 0.0;
  for (std::size_t s = 0; s < spec.num_speakers; ++s) {
    speaker_weights[s] = std::pow(static_cast<double>(s + 1), -spec.speaker_skew);
    weight_total += speaker_weights[s];
  }

  struct Draft {
    std::size_t label;
    std::size_t speaker;
    std::vector<std::string> tokens;
    nn::Matrix frames;
  };
  std::vector<Draft> drafts;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t n = 0; n < spec.class_counts[c]; ++n) {
      Draft d;
      d.label = c;
      double pick = rng.uniform() * weight_total;
      d.speaker = spec.num_speakers - 1;
      for (std::size_t s = 0; s < spec.num_speakers; ++s) {
        if (pick < speaker_weights[s]) {
          d.speaker = s;
          break;
        }
        pick -= speaker_weights[s];
      }

      const std::size_t length = std::max<std::uint64_t>(1, rng.poisson(spec.mean_length));
      for (std::size_t t = 0; t < length; ++t) {
        if (rng.bernoulli(spec.text_signal)) {
          d.tokens.push_back("cls" + std::to_string(text_groups[c]) + "w" +
                             std::to_string(rng.below(spec.class_vocab)));
        } else {
          d.tokens.push_back("sharedw" + std::to_string(rng.below(spec.shared_vocab)));
        }
      }

      const std::size_t frames = std::max<std::uint64_t>(1, rng.poisson(spec.mean_frames));
      d.frames = nn::Matrix(frames, spec.feature_dim);
      const auto& mean = means[acoustic_groups[c]];
      for (std::size_t t = 0; t < frames; ++t) {
        auto row = d.frames.row(t);
        for (std::size_t j = 0; j < spec.feature_dim; ++j) {
          row[j] = quantize(spec.acoustic_signal * mean[j] + rng.normal());
        }
      }
      drafts.push_back(std::move(d));
    }
  }
  rng.shuffle(std::span(drafts));

  SynthCorpus out;
  out.corpus.label_names = spec.class_names;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    Draft& d = drafts[i];
    Utterance u;
    u.id = padded_number("utt", i, 5);
    u.speaker = padded_number("spk", d.speaker, 3);
    u.label = d.label;
    for (const auto& tok : d.tokens) {
      if (!u.transcript.empty()) u.transcript.push_back(' ');
      u.transcript += tok;
    }
    u.tokens = std::move(d.tokens);
    u.feature_path = "features/" + u.id + ".csv";
    out.corpus.utterances.push_back(std::move(u));
    out.features.push_back(std::move(d.frames));
  }
  return out;
}

void write_synth_corpus(const SynthCorpus& synth, const SynthSpec& spec, std::uint64_t seed,
                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "features");
  write_manifest(synth.corpus, out_dir / "manifest.jsonl");
  for (std::size_t i = 0; i < synth.corpus.size(); ++i) {
    acoustic::write_feature_csv(out_dir / *synth.corpus.utterances[i].feature_path,
                                synth.features[i]);
  }
  json echo = to_json(spec);
  echo["seed"] = seed;
  std::ofstream out(out_dir / "synth_spec.json", std::ios::binary);
  if (!out) throw IoError("cannot write " + (out_dir / "synth_spec.json").string());
  out << echo.dump(2) << '\n';
}

}  // namespace emorec::data
