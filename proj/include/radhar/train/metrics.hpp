#pragma once

// Confusion matrix and accuracy summaries.

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "radhar/core/error.hpp"
#include "radhar/core/matrix.hpp"

namespace radhar::train {

struct MetricsReport {
  std::size_t classes = 0;
  Matrix<std::size_t> confusion;  // rows = true class, cols = predicted
  std::vector<double> per_class_accuracy;
  double overall_accuracy = 0.0;
  std::size_t total = 0;
};

inline MetricsReport make_report(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& predicted,
                                 std::size_t classes) {
  require(truth.size() == predicted.size(), Errc::ShapeMismatch, "metrics: label and prediction counts differ");
  MetricsReport r;
  r.classes = classes;
  r.confusion = Matrix<std::size_t>(classes, classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(truth[i] < classes && predicted[i] < classes, Errc::LabelOutOfRange, "metrics: label out of range");
    ++r.confusion(truth[i], predicted[i]);
  }
  std::size_t correct = 0;
  r.per_class_accuracy.assign(classes, 0.0);
  for (std::size_t k = 0; k < classes; ++k) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < classes; ++j) row += r.confusion(k, j);
    r.per_class_accuracy[k] = row ? static_cast<double>(r.confusion(k, k)) / static_cast<double>(row) : 0.0;
    correct += r.confusion(k, k);
  }
  r.total = truth.size();
  r.overall_accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

inline std::string confusion_csv(const MetricsReport& r, const std::vector<std::string>& names = {}) {
  auto name = [&](std::size_t k) { return k < names.size() ? names[k] : std::to_string(k); };
  std::ostringstream os;
  os << "true\\pred";
  for (std::size_t k = 0; k < r.classes; ++k) os << ',' << name(k);
  os << '\n';
  for (std::size_t i = 0; i < r.classes; ++i) {
    os << name(i);
    for (std::size_t j = 0; j < r.classes; ++j) os << ',' << r.confusion(i, j);
    os << '\n';
  }
  return os.str();
}

inline std::string metrics_csv(const MetricsReport& r, const std::vector<std::string>& names = {}) {
  auto name = [&](std::size_t k) { return k < names.size() ? names[k] : std::to_string(k); };
  std::ostringstream os;
  os << "class,count,correct,accuracy\n";
  for (std::size_t k = 0; k < r.classes; ++k) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < r.classes; ++j) row += r.confusion(k, j);
    os << name(k) << ',' << row << ',' << r.confusion(k, k) << ',' << r.per_class_accuracy[k] << '\n';
  }
  os << "overall," << r.total << ',' << static_cast<std::size_t>(std::llround(r.overall_accuracy * r.total)) << ','
     << r.overall_accuracy << '\n';
  return os.str();
}

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.classes; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < r.classes; ++j) row.push_back(r.confusion(i, j));
    rows.push_back(row);
  }
  return {{"confusion", rows},
          {"per_class_accuracy", r.per_class_accuracy},
          {"overall_accuracy", r.overall_accuracy},
          {"total", r.total}};
}

}  // namespace radhar::train
