#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netids/common.hpp"

namespace netids {

// Exact ratio so paper-table checks need no floating-point tolerance.
// den == 0 marks an undefined metric, reported as 0 with a flag.
struct Ratio {
  uint64_t num = 0, den = 0;

  static Ratio make(uint64_t n, uint64_t d) {
    if (d == 0) return {0, 0};
    uint64_t g = std::gcd(n, d);
    if (g == 0) return {0, d};
    return {n / g, d / g};
  }
  bool undefined() const { return den == 0; }
  double value() const { return den ? double(num) / double(den) : 0.0; }
  friend bool operator==(const Ratio& a, const Ratio& b) = default;
};

struct ConfusionMatrix {
  size_t k = 0;
  std::vector<uint64_t> cells;  // rows = actual, cols = predicted

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(size_t classes) : k(classes), cells(classes * classes, 0) {}
  uint64_t& at(size_t actual, size_t predicted) { return cells[actual * k + predicted]; }
  uint64_t at(size_t actual, size_t predicted) const { return cells[actual * k + predicted]; }
  uint64_t total() const {
    uint64_t t = 0;
    for (auto c : cells) t += c;
    return t;
  }
  uint64_t trace() const {
    uint64_t t = 0;
    for (size_t i = 0; i < k; ++i) t += at(i, i);
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<uint8_t>& actual,
                                 const std::vector<uint8_t>& predicted, size_t k) {
  if (actual.size() != predicted.size()) throw ShapeMismatch("confusion input lengths differ");
  ConfusionMatrix cm(k);
  for (size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] >= k || predicted[i] >= k)
      throw CodeOutOfRange("class code out of range at row " + std::to_string(i));
    cm.at(actual[i], predicted[i])++;
  }
  return cm;
}

struct CountMetrics {
  uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  Ratio accuracy, precision, recall, f1;
  bool accuracy_undefined = false, precision_undefined = false, recall_undefined = false,
       f1_undefined = false;
};

inline CountMetrics metrics_from_counts(uint64_t tp, uint64_t tn, uint64_t fp, uint64_t fn) {
  CountMetrics m;
  m.tp = tp;
  m.tn = tn;
  m.fp = fp;
  m.fn = fn;
  m.accuracy = Ratio::make(tp + tn, tp + tn + fp + fn);
  m.precision = Ratio::make(tp, tp + fp);
  m.recall = Ratio::make(tp, tp + fn);
  m.f1 = Ratio::make(2 * tp, 2 * tp + fp + fn);  // equals 2PR/(P+R) exactly
  m.accuracy_undefined = tp + tn + fp + fn == 0;
  m.precision_undefined = tp + fp == 0;
  m.recall_undefined = tp + fn == 0;
  m.f1_undefined = 2 * tp + fp + fn == 0;
  return m;
}

// Binary counts for "class c vs the rest" read straight off the K×K matrix.
inline CountMetrics one_vs_rest(const ConfusionMatrix& cm, size_t c) {
  uint64_t tp = cm.at(c, c);
  uint64_t fn = 0, fp = 0;
  for (size_t j = 0; j < cm.k; ++j) {
    if (j == c) continue;
    fn += cm.at(c, j);
    fp += cm.at(j, c);
  }
  uint64_t tn = cm.total() - tp - fn - fp;
  return metrics_from_counts(tp, tn, fp, fn);
}

struct EvaluationReport {
  ConfusionMatrix cm;
  Ratio overall_accuracy;
  std::vector<CountMetrics> per_class;
  std::vector<std::string> class_names;
};

inline EvaluationReport evaluate_codes(const std::vector<uint8_t>& actual,
                                       const std::vector<uint8_t>& predicted, size_t k,
                                       std::vector<std::string> class_names) {
  EvaluationReport report;
  report.cm = confusion(actual, predicted, k);
  report.overall_accuracy = Ratio::make(report.cm.trace(), report.cm.total());
  for (size_t c = 0; c < k; ++c) report.per_class.push_back(one_vs_rest(report.cm, c));
  report.class_names = std::move(class_names);
  return report;
}

inline std::string format_percent(const Ratio& r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", r.value() * 100.0);
  return buf;
}

inline std::string render_report(const EvaluationReport& report) {
  std::ostringstream out;
  out << "confusion matrix (rows = actual, cols = predicted)\n";
  size_t k = report.cm.k;
  size_t name_w = 10;
  for (const auto& n : report.class_names) name_w = std::max(name_w, n.size() + 2);
  out << std::string(name_w, ' ');
  for (size_t j = 0; j < k; ++j) {
    std::string n = report.class_names[j];
    out << n << std::string(n.size() < 14 ? 14 - n.size() : 1, ' ');
  }
  out << '\n';
  for (size_t i = 0; i < k; ++i) {
    const std::string& n = report.class_names[i];
    out << n << std::string(name_w - n.size(), ' ');
    for (size_t j = 0; j < k; ++j) {
      std::string v = std::to_string(report.cm.at(i, j));
      out << v << std::string(v.size() < 14 ? 14 - v.size() : 1, ' ');
    }
    out << '\n';
  }
  out << "overall accuracy: " << format_percent(report.overall_accuracy) << "%\n";
  out << "class           accuracy   precision  recall     f1\n";
  for (size_t c = 0; c < k; ++c) {
    const auto& m = report.per_class[c];
    std::string n = report.class_names[c];
    out << n << std::string(n.size() < 16 ? 16 - n.size() : 1, ' ');
    for (const Ratio* r : {&m.accuracy, &m.precision, &m.recall, &m.f1}) {
      std::string v = format_percent(*r);
      out << v << std::string(v.size() < 11 ? 11 - v.size() : 1, ' ');
    }
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["classes"] = report.class_names;
  j["confusion"] = nlohmann::json::array();
  for (size_t i = 0; i < report.cm.k; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (size_t c = 0; c < report.cm.k; ++c) row.push_back(report.cm.at(i, c));
    j["confusion"].push_back(row);
  }
  j["overall_accuracy"] = report.overall_accuracy.value();
  j["per_class"] = nlohmann::json::array();
  for (size_t c = 0; c < report.cm.k; ++c) {
    const auto& m = report.per_class[c];
    nlohmann::json e;
    e["class"] = report.class_names[c];
    e["tp"] = m.tp;
    e["tn"] = m.tn;
    e["fp"] = m.fp;
    e["fn"] = m.fn;
    e["accuracy"] = m.accuracy.value();
    e["precision"] = m.precision.value();
    e["recall"] = m.recall.value();
    e["f1"] = m.f1.value();
    e["precision_undefined"] = m.precision_undefined;
    e["recall_undefined"] = m.recall_undefined;
    e["f1_undefined"] = m.f1_undefined;
    j["per_class"].push_back(e);
  }
  return j;
}

}  // namespace netids
