#include "emorec/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "emorec/error.hpp"

namespace emorec::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::string> class_names)
    : k_(num_classes), names_(std::move(class_names)), counts_(num_classes * num_classes, 0) {
  if (names_.empty()) {
    for (std::size_t c = 0; c < k_; ++c) names_.push_back("class" + std::to_string(c));
  }
  if (names_.size() != k_) throw ShapeError("confusion matrix class names do not match K");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= k_ || predicted >= k_) {
    throw IndexError("class index outside confusion matrix of size " + std::to_string(k_));
  }
  ++counts_[truth * k_ + predicted];
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
  return std::accumulate(counts_.begin() + static_cast<std::ptrdiff_t>(truth * k_),
                         counts_.begin() + static_cast<std::ptrdiff_t>((truth + 1) * k_),
                         std::size_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ShapeError("merging confusion matrices of different sizes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels, std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("prediction and label lists differ in length");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
  return cm;
}

double weighted_accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw MetricError("accuracy of an empty confusion matrix");
  std::size_t trace = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(total);
}

std::vector<double> recall_per_class(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw MetricError("recall of an empty confusion matrix");
  std::vector<double> recall(cm.num_classes());
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const std::size_t row = cm.row_total(c);
    if (row == 0) {
      throw MetricError("class '" + cm.class_names()[c] + "' has no examples; UA is undefined");
    }
    recall[c] = static_cast<double>(cm.at(c, c)) / static_cast<double>(row);
  }
  return recall;
}

double unweighted_accuracy(const ConfusionMatrix& cm) {
  const auto recall = recall_per_class(cm);
  return std::accumulate(recall.begin(), recall.end(), 0.0) / static_cast<double>(recall.size());
}

ResultRow summarize(std::string system, const ConfusionMatrix& cm) {
  return {std::move(system), recall_per_class(cm), weighted_accuracy(cm), unweighted_accuracy(cm)};
}

std::string ResultTable::to_text() const {
  std::size_t name_width = 6;
  for (const auto& r : rows) name_width = std::max(name_width, r.system.size());
  std::vector<std::string> headers = class_names;
  if (show_wa) headers.push_back("WA");
  headers.push_back("UA");

  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(name_width), "System");
  out += buf;
  std::vector<int> widths;
  for (const auto& h : headers) {
    const int w = static_cast<int>(std::max<std::size_t>(h.size(), 7));
    widths.push_back(w);
    std::snprintf(buf, sizeof(buf), "  %*s", w, h.c_str());
    out += buf;
  }
  out += '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(name_width), r.system.c_str());
    out += buf;
    std::vector<double> cells = r.recall;
    if (show_wa) cells.push_back(r.wa);
    cells.push_back(r.ua);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "  %*.2f", widths[i], 100.0 * cells[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json j;
  j["classes"] = class_names;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row{{"system", r.system}, {"recall", r.recall}, {"ua", r.ua}};
    if (show_wa) row["wa"] = r.wa;
    j["rows"].push_back(std::move(row));
  }
  return j;
}

}  // namespace emorec::eval
