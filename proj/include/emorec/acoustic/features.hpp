#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emorec/nn/matrix.hpp"

namespace emorec::acoustic {

using nn::Matrix;

inline constexpr std::size_t kDefaultFeatureDim = 88;

/// Frame-level acoustic features for one utterance (10 ms frame period).
struct FeatureSequence {
  std::string utterance_id;
  Matrix frames;  // T x D

  std::size_t steps() const noexcept { return frames.rows(); }
  std::size_t dim() const noexcept { return frames.cols(); }
};

/// One frame per line, comma-separated numbers, uniform column count.
FeatureSequence load_feature_csv(const std::filesystem::path& path);
/// Writes shortest round-trip representations, so load(write(m)) == m.
void write_feature_csv(const std::filesystem::path& path, const Matrix& frames);

/// Per-dimension z-scoring with statistics fit on training sequences only.
class FeatureNormalizer {
 public:
  FeatureNormalizer() = default;
  FeatureNormalizer(std::vector<double> mean, std::vector<double> stddev);

  static FeatureNormalizer fit(std::span<const Matrix* const> sequences);

  Matrix apply(const Matrix& frames) const;
  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& stddev() const noexcept { return stddev_; }
  std::size_t dim() const noexcept { return mean_.size(); }

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

}  // namespace emorec::acoustic
