#ifndef ARTLENS_PREDICTIONS_HPP
#define ARTLENS_PREDICTIONS_HPP

// Prediction files: one JSON object per line, {"id", "gold", "pred", "score"},
// with gold/pred as class names. "gold" is null when the query row carries no
// label for the task.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "store.hpp"

namespace artlens {

struct Prediction {
  std::string id;
  std::optional<std::string> gold;
  std::string pred;
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

inline std::string encode_predictions(const std::vector<Prediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    nlohmann::json j = {{"id", p.id},
                        {"gold", p.gold ? nlohmann::json(*p.gold) : nlohmann::json(nullptr)},
                        {"pred", p.pred},
                        {"score", p.score}};
    out += j.dump() + "\n";
  }
  return out;
}

inline std::vector<Prediction> decode_predictions(std::string_view text) {
  std::vector<Prediction> out;
  std::size_t line_no = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      if (j.contains("gold") && !j.at("gold").is_null()) p.gold = j.at("gold").get<std::string>();
      p.pred = j.at("pred").get<std::string>();
      p.score = j.value("score", 0.0);
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline void write_predictions(const std::vector<Prediction>& preds,
                              const std::filesystem::path& path) {
  detail::write_file(path, encode_predictions(preds));
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  return decode_predictions(detail::read_file(path));
}

/// Scores predictions that carry a gold label; unlabeled rows are skipped.
inline EvalReport evaluate_predictions(const std::vector<Prediction>& preds,
                                       const LabelSpace& labelspace, std::string model,
                                       Averaging averaging = Averaging::macro) {
  std::vector<std::size_t> p, g;
  for (const auto& pr : preds) {
    if (!pr.gold) continue;
    g.push_back(labelspace.index_of(*pr.gold));
    p.push_back(labelspace.index_of(pr.pred));
  }
  return evaluate(p, g, labelspace, std::move(model), averaging);
}

} // namespace artlens

#endif // ARTLENS_PREDICTIONS_HPP
