#pragma once

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seqtext/errors.hpp"

namespace seqtext {

// counts[i][j] = examples of true class i predicted as j.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const noexcept { return classes_; }
  std::size_t& at(std::size_t truth, std::size_t pred) { return counts_.at(truth * classes_ + pred); }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts_.at(truth * classes_ + pred); }

  std::size_t total() const noexcept {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  std::size_t row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < classes_; ++j) s += at(truth, j);
    return s;
  }
  std::size_t col_sum(std::size_t pred) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < classes_; ++i) s += at(i, pred);
    return s;
  }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < classes_; ++i) s += at(i, i);
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

enum class Averaging { Macro, Weighted };

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;

  bool operator==(const ClassScores&) const = default;
};

// All values are percentages.
struct EvalReport {
  double accuracy = 0.0;
  std::vector<ClassScores> per_class;
  ClassScores macro;
  ClassScores weighted;
  // Headline P/R/F1: class 1 for binary tasks, the chosen average otherwise.
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionMatrix confusion;
  bool zero_division = false;  // some precision or recall had a 0 denominator

  bool operator==(const EvalReport&) const = default;
};

// Harmonic mean, 0 when both inputs are 0.
inline double f1_score(double precision, double recall) noexcept {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

namespace detail {

inline void check_predictions(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                              std::size_t classes) {
  if (preds.size() != labels.size()) throw ContractError("metrics: predictions and labels differ in length");
  if (preds.empty()) throw ContractError("metrics: no examples");
  if (classes == 0) throw ContractError("metrics: zero classes");
  for (std::size_t k = 0; k < preds.size(); ++k)
    if (preds[k] >= classes || labels[k] >= classes)
      throw ContractError("metrics: class index out of range at example " + std::to_string(k));
}

inline double percent(std::size_t num, std::size_t den, bool& zero_div) {
  if (den == 0) {
    zero_div = true;
    return 0.0;
  }
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

// Fills the aggregate fields of a report from its per-class entries.
inline void finish_report(EvalReport& r, Averaging averaging, std::size_t total) {
  const auto C = r.per_class.size();
  for (const auto& s : r.per_class) {
    r.macro.precision += s.precision;
    r.macro.recall += s.recall;
    r.macro.f1 += s.f1;
    r.macro.support += s.support;
    const double w = static_cast<double>(s.support) / static_cast<double>(total);
    r.weighted.precision += w * s.precision;
    r.weighted.recall += w * s.recall;
    r.weighted.f1 += w * s.f1;
    r.weighted.support += s.support;
  }
  r.macro.precision /= static_cast<double>(C);
  r.macro.recall /= static_cast<double>(C);
  r.macro.f1 /= static_cast<double>(C);

  const ClassScores& head = C == 2 ? r.per_class[1] : (averaging == Averaging::Macro ? r.macro : r.weighted);
  r.precision = head.precision;
  r.recall = head.recall;
  r.f1 = head.f1;
}

}  // namespace detail

inline ConfusionMatrix confusion(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                                 std::size_t classes) {
  detail::check_predictions(preds, labels, classes);
  ConfusionMatrix cm(classes);
  for (std::size_t k = 0; k < preds.size(); ++k) ++cm.at(labels[k], preds[k]);
  return cm;
}

inline EvalReport scores(const ConfusionMatrix& cm, Averaging averaging = Averaging::Macro) {
  const auto total = cm.total();
  if (total == 0) throw ContractError("scores: empty confusion matrix");
  EvalReport r;
  r.confusion = cm;
  bool zero_div = false;
  r.accuracy = detail::percent(cm.trace(), total, zero_div);
  for (std::size_t j = 0; j < cm.classes(); ++j) {
    ClassScores s;
    s.precision = detail::percent(cm.at(j, j), cm.col_sum(j), r.zero_division);
    s.recall = detail::percent(cm.at(j, j), cm.row_sum(j), r.zero_division);
    s.f1 = f1_score(s.precision, s.recall);
    s.support = cm.row_sum(j);
    r.per_class.push_back(s);
  }
  detail::finish_report(r, averaging, total);
  return r;
}

// Independent recomputation by direct counting over (pred, label) pairs; no
// confusion matrix is consulted for the scores. Used to cross-check scores().
inline EvalReport brute_force_scores_oracle(std::span<const std::size_t> preds, std::span<const std::size_t> labels,
                                            std::size_t classes, Averaging averaging = Averaging::Macro) {
  detail::check_predictions(preds, labels, classes);
  EvalReport r;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) correct += preds[k] == labels[k] ? 1 : 0;
  bool unused = false;
  r.accuracy = detail::percent(correct, preds.size(), unused);
  for (std::size_t j = 0; j < classes; ++j) {
    std::size_t tp = 0, predicted = 0, actual = 0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
      const bool p = preds[k] == j, a = labels[k] == j;
      tp += p && a ? 1 : 0;
      predicted += p ? 1 : 0;
      actual += a ? 1 : 0;
    }
    ClassScores s;
    s.precision = detail::percent(tp, predicted, r.zero_division);
    s.recall = detail::percent(tp, actual, r.zero_division);
    s.f1 = f1_score(s.precision, s.recall);
    s.support = actual;
    r.per_class.push_back(s);
  }
  detail::finish_report(r, averaging, preds.size());
  r.confusion = confusion(preds, labels, classes);
  return r;
}

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Accuracy | Precision | Recall | F1 Score, two decimals.
inline void print_report_table(std::ostream& os, const EvalReport& r, const std::string& label,
                               const std::vector<std::string>& class_names = {}) {
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %10s\n", "Model", "Accuracy", "Precision", "Recall",
                "F1 Score");
  os << line;
  std::snprintf(line, sizeof line, "%-10s %10.2f %10.2f %10.2f %10.2f\n", label.c_str(), r.accuracy, r.precision,
                r.recall, r.f1);
  os << line;
  if (r.per_class.empty()) return;
  os << "\nper class:\n";
  for (std::size_t j = 0; j < r.per_class.size(); ++j) {
    const auto& s = r.per_class[j];
    const std::string name = j < class_names.size() ? class_names[j] : std::to_string(j);
    std::snprintf(line, sizeof line, "  %-16s P %6.2f  R %6.2f  F1 %6.2f  n=%zu\n", name.c_str(), s.precision,
                  s.recall, s.f1, s.support);
    os << line;
  }
  if (r.zero_division) os << "warning: zero denominator in some precision/recall (reported as 0)\n";
}

// One "name=value" per line, full precision.
inline void write_metrics(std::ostream& os, const EvalReport& r) {
  auto put = [&](const std::string& k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << k << '=' << buf << '\n';
  };
  put("accuracy", r.accuracy);
  put("precision", r.precision);
  put("recall", r.recall);
  put("f1", r.f1);
  put("macro_precision", r.macro.precision);
  put("macro_recall", r.macro.recall);
  put("macro_f1", r.macro.f1);
  put("weighted_precision", r.weighted.precision);
  put("weighted_recall", r.weighted.recall);
  put("weighted_f1", r.weighted.f1);
  for (std::size_t j = 0; j < r.per_class.size(); ++j) {
    const auto p = "class" + std::to_string(j) + "_";
    put(p + "precision", r.per_class[j].precision);
    put(p + "recall", r.per_class[j].recall);
    put(p + "f1", r.per_class[j].f1);
    os << p << "support=" << r.per_class[j].support << '\n';
  }
  os << "examples=" << r.confusion.total() << '\n';
  os << "zero_division=" << (r.zero_division ? 1 : 0) << '\n';
}

}  // namespace seqtext
