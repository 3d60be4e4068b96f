#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace emorec::eval {

/// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes = 0, std::vector<std::string> class_names = {});

  std::size_t num_classes() const noexcept { return k_; }
  const std::vector<std::string>& class_names() const noexcept { return names_; }

  void add(std::size_t truth, std::size_t predicted);
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::size_t total() const;
  std::size_t row_total(std::size_t truth) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::string> names_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels, std::size_t num_classes);

/// trace / total. Throws MetricError on an empty matrix.
double weighted_accuracy(const ConfusionMatrix& cm);
/// Per-class recall. Throws MetricError if any class row is empty.
std::vector<double> recall_per_class(const ConfusionMatrix& cm);
/// Mean of per-class recalls.
double unweighted_accuracy(const ConfusionMatrix& cm);

/// One row of a results table: system name, per-class recall, WA, UA.
struct ResultRow {
  std::string system;
  std::vector<double> recall;
  double wa = 0.0;
  double ua = 0.0;
};

ResultRow summarize(std::string system, const ConfusionMatrix& cm);

struct ResultTable {
  std::vector<std::string> class_names;
  std::vector<ResultRow> rows;
  bool show_wa = true;

  /// Aligned plain text, percentages with two decimals.
  std::string to_text() const;
  nlohmann::json to_json() const;
};

}  // namespace emorec::eval
