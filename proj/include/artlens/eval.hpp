#ifndef ARTLENS_EVAL_HPP
#define ARTLENS_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "matrix.hpp"
#include "store.hpp"

namespace artlens {

using ConfusionMatrix = Matrix<std::uint64_t>;

/// Entry (g, p) counts samples with gold class g predicted as p.
inline ConfusionMatrix confusion_matrix(std::span<const std::size_t> preds,
                                        std::span<const std::size_t> golds, std::size_t classes) {
  if (preds.size() != golds.size())
    throw DimensionError("confusion_matrix: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(golds.size()) + " gold labels");
  ConfusionMatrix cm(classes, classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= classes || golds[i] >= classes)
      throw ArgumentError("confusion_matrix: class index out of range at sample " +
                          std::to_string(i));
    ++cm(golds[i], preds[i]);
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

enum class Averaging { macro, weighted };

struct AggregateMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Per-class P/R/F1 with zero for any zero denominator, averaged over classes
/// that occur as gold labels (unweighted for macro, by support for weighted).
inline AggregateMetrics macro_metrics(const ConfusionMatrix& cm,
                                      Averaging averaging = Averaging::macro) {
  if (cm.rows() != cm.cols()) throw DimensionError("confusion matrix must be square");
  const std::size_t n = cm.rows();
  AggregateMetrics out;
  out.per_class.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += cm(c, k);
      col += cm(k, c);
    }
    auto& m = out.per_class[c];
    const double tp = static_cast<double>(cm(c, c));
    m.support = row;
    m.precision = col ? tp / static_cast<double>(col) : 0.0;
    m.recall = row ? tp / static_cast<double>(row) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  double weight_sum = 0.0;
  for (const auto& m : out.per_class) {
    if (m.support == 0) continue;
    const double w = averaging == Averaging::macro ? 1.0 : static_cast<double>(m.support);
    out.precision += w * m.precision;
    out.recall += w * m.recall;
    out.f1 += w * m.f1;
    weight_sum += w;
  }
  if (weight_sum > 0.0) {
    out.precision /= weight_sum;
    out.recall /= weight_sum;
    out.f1 /= weight_sum;
  }
  return out;
}

inline double accuracy_at_1(std::span<const std::size_t> preds,
                            std::span<const std::size_t> golds) {
  if (preds.size() != golds.size()) throw DimensionError("accuracy_at_1: length mismatch");
  if (preds.empty()) throw ArgumentError("accuracy_at_1: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

struct EvalReport {
  std::string model;
  std::string task;
  std::vector<std::string> classes;
  Averaging averaging = Averaging::macro;
  ConfusionMatrix confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double acc1 = 0.0;
  std::vector<ClassMetrics> per_class;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto v : confusion.data()) t += v;
    return t;
  }
};

inline EvalReport evaluate(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                           const LabelSpace& labelspace, std::string model,
                           Averaging averaging = Averaging::macro) {
  EvalReport r;
  r.model = std::move(model);
  r.task = labelspace.task();
  r.classes = labelspace.classes();
  r.averaging = averaging;
  r.confusion = confusion_matrix(preds, golds, labelspace.size());
  auto m = macro_metrics(r.confusion, averaging);
  r.precision = m.precision;
  r.recall = m.recall;
  r.f1 = m.f1;
  r.per_class = std::move(m.per_class);
  r.acc1 = accuracy_at_1(preds, golds);
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    per_class.push_back({{"class", c < r.classes.size() ? r.classes[c] : std::to_string(c)},
                         {"P", m.precision},
                         {"R", m.recall},
                         {"F1", m.f1},
                         {"support", m.support}});
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t g = 0; g < r.confusion.rows(); ++g) {
    auto row = r.confusion.row(g);
    confusion.push_back(std::vector<std::uint64_t>(row.begin(), row.end()));
  }
  return {{"model", r.model},
          {"task", r.task},
          {"averaging", r.averaging == Averaging::macro ? "macro" : "weighted"},
          {"P", r.precision},
          {"R", r.recall},
          {"F1", r.f1},
          {"acc1", r.acc1},
          {"classes", r.classes},
          {"confusion", confusion},
          {"per_class", per_class}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.model = j.at("model").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.averaging = j.value("averaging", "macro") == "weighted" ? Averaging::weighted
                                                              : Averaging::macro;
    r.precision = j.at("P").get<double>();
    r.recall = j.at("R").get<double>();
    r.f1 = j.at("F1").get<double>();
    r.acc1 = j.at("acc1").get<double>();
    r.classes = j.value("classes", std::vector<std::string>{});
    if (j.contains("confusion")) {
      const auto rows = j.at("confusion").get<std::vector<std::vector<std::uint64_t>>>();
      r.confusion = ConfusionMatrix(rows.size(), rows.size(), 0);
      for (std::size_t g = 0; g < rows.size(); ++g) {
        if (rows[g].size() != rows.size()) throw FormatError("confusion matrix is not square");
        for (std::size_t p = 0; p < rows.size(); ++p) r.confusion(g, p) = rows[g][p];
      }
    }
    for (const auto& c : j.value("per_class", nlohmann::json::array()))
      r.per_class.push_back({c.at("P").get<double>(), c.at("R").get<double>(),
                             c.at("F1").get<double>(), c.at("support").get<std::uint64_t>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
}

/// Fraction in [0, 1] as a percentage with one decimal, ties to even.
inline std::string format_percent(double fraction) {
  const double tenths = std::nearbyint(fraction * 1000.0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", tenths / 10.0);
  return buf;
}

/// Text table with one row per model and P / R / F1 / acc@1 columns for
/// every task, tasks in order of first appearance. Cells for a task a model
/// has no report for are "-".
inline std::string render_report(const std::vector<EvalReport>& reports,
                                 const std::vector<std::string>& model_names) {
  std::vector<std::string> tasks;
  for (const auto& name : model_names)
    for (const auto& r : reports)
      if (r.model == name && std::find(tasks.begin(), tasks.end(), r.task) == tasks.end())
        tasks.push_back(r.task);

  std::size_t name_width = 5;
  for (const auto& n : model_names) name_width = std::max(name_width, n.size());

  auto pad = [](std::string s, std::size_t w, bool left) {
    if (s.size() < w) s = left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
    return s;
  };
  constexpr std::size_t cell = 6;

  std::string head1 = pad("", name_width, true);
  std::string head2 = pad("Model", name_width, true);
  for (const auto& t : tasks) {
    head1 += " | " + pad(t, 4 * cell + 3, true);
    head2 += " | " + pad("P", cell, false) + " " + pad("R", cell, false) + " " +
             pad("F1", cell, false) + " " + pad("acc@1", cell, false);
  }
  std::string out = head1 + "\n" + head2 + "\n" + std::string(head2.size(), '-') + "\n";

  for (const auto& name : model_names) {
    std::string line = pad(name, name_width, true);
    for (const auto& t : tasks) {
      const EvalReport* hit = nullptr;
      for (const auto& r : reports)
        if (r.model == name && r.task == t) hit = &r;
      line += " | ";
      if (hit) {
        line += pad(format_percent(hit->precision), cell, false) + " " +
                pad(format_percent(hit->recall), cell, false) + " " +
                pad(format_percent(hit->f1), cell, false) + " " +
                pad(format_percent(hit->acc1), cell, false);
      } else {
        line += pad("-", cell, false) + " " + pad("-", cell, false) + " " + pad("-", cell, false) +
                " " + pad("-", cell, false);
      }
    }
    out += line + "\n";
  }
  return out;
}

} // namespace artlens

#endif // ARTLENS_EVAL_HPP
