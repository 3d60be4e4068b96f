#include "emorec/acoustic/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "emorec/error.hpp"
#include "emorec/io/format.hpp"

namespace emorec::acoustic {

FeatureSequence load_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feature file " + path.string());
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      double v;
      try {
        v = io::parse_double(cell);
      } catch (const FormatError&) {
        throw FormatError(path.string() + " row " + std::to_string(rows + 1) +
                          ": non-numeric cell '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw NumericError(path.string() + " row " + std::to_string(rows + 1) +
                           ": non-finite value");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw FormatError(path.string() + " row " + std::to_string(rows + 1) + " has " +
                        std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw EmptySequenceError("feature file " + path.string() + " has no frames");
  return {path.stem().string(), Matrix(rows, cols, std::move(values))};
}

void write_feature_csv(const std::filesystem::path& path, const Matrix& frames) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file " + path.string());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto row = frames.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d > 0) out << ',';
      out << io::format_double(row[d]);
    }
    out << '\n';
  }
}

FeatureNormalizer::FeatureNormalizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != stddev_.size()) throw ShapeError("normalizer mean/stddev length mismatch");
}

FeatureNormalizer FeatureNormalizer::fit(std::span<const Matrix* const> sequences) {
  if (sequences.empty()) throw EmptySequenceError("normalizer fit on no sequences");
  const std::size_t d = sequences.front()->cols();
  std::vector<double> sum(d, 0.0);
  std::vector<double> sum_sq(d, 0.0);
  double frames = 0.0;
  for (const Matrix* m : sequences) {
    if (m->cols() != d) throw ShapeError("feature dimension differs across sequences");
    for (std::size_t t = 0; t < m->rows(); ++t) {
      const auto r = m->row(t);
      for (std::size_t j = 0; j < d; ++j) {
        sum[j] += r[j];
        sum_sq[j] += r[j] * r[j];
      }
    }
    frames += static_cast<double>(m->rows());
  }
  std::vector<double> mean(d), stddev(d);
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] = sum[j] / frames;
    const double var = std::max(0.0, sum_sq[j] / frames - mean[j] * mean[j]);
    // Constant dimensions are centred but not scaled.
    stddev[j] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return FeatureNormalizer(std::move(mean), std::move(stddev));
}

Matrix FeatureNormalizer::apply(const Matrix& frames) const {
  if (frames.cols() != dim()) {
    throw ShapeError("features have " + std::to_string(frames.cols()) +
                     " dims, normalizer expects " + std::to_string(dim()));
  }
  Matrix out(frames.rows(), frames.cols());
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto src = frames.row(t);
    auto dst = out.row(t);
    for (std::size_t j = 0; j < dim(); ++j) dst[j] = (src[j] - mean_[j]) / stddev_[j];
  }
  return out;
}

}  // namespace emorec::acoustic
