#include <gtest/gtest.h>

#include <artlens/eval.hpp>
#include <artlens/predictions.hpp>

#include "oracles.hpp"

using namespace artlens;

namespace {

ConfusionMatrix from_nested(const std::vector<std::vector<std::uint64_t>>& rows) {
  ConfusionMatrix cm(rows.size(), rows.size(), 0);
  for (std::size_t g = 0; g < rows.size(); ++g)
    for (std::size_t p = 0; p < rows.size(); ++p) cm(g, p) = rows[g][p];
  return cm;
}

std::vector<std::vector<std::uint64_t>> to_nested(const ConfusionMatrix& cm) {
  std::vector<std::vector<std::uint64_t>> out;
  for (std::size_t g = 0; g < cm.rows(); ++g) out.emplace_back(cm.row(g).begin(), cm.row(g).end());
  return out;
}

} // namespace

TEST(Eval, IdentityPredictionsArePerfect) {
  const std::vector<std::size_t> y{0, 1, 2, 2, 1, 0, 3};
  const auto m = macro_metrics(confusion_matrix(y, y, 4));
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(accuracy_at_1(y, y), 1.0);
}

TEST(Eval, ZeroDenominatorsGiveZero) {
  // Two samples of class 0 both predicted as 1.
  const auto m = macro_metrics(from_nested({{0, 2}, {0, 0}}));
  EXPECT_EQ(m.per_class[0].precision, 0.0);
  EXPECT_EQ(m.per_class[0].recall, 0.0);
  EXPECT_EQ(m.per_class[0].f1, 0.0);
  EXPECT_EQ(m.per_class[1].precision, 0.0);
  EXPECT_EQ(m.per_class[1].support, 0u);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Eval, HandComputedThreeClassExample) {
  const auto m = macro_metrics(from_nested({{2, 1, 0}, {0, 3, 0}, {1, 0, 3}}));
  EXPECT_NEAR(m.per_class[0].precision, 2.0 / 3, 1e-15);
  EXPECT_NEAR(m.per_class[1].precision, 3.0 / 4, 1e-15);
  EXPECT_NEAR(m.per_class[2].precision, 1.0, 1e-15);
  EXPECT_NEAR(m.per_class[2].recall, 3.0 / 4, 1e-15);
  EXPECT_NEAR(m.per_class[1].f1, 6.0 / 7, 1e-15);
  EXPECT_NEAR(m.precision, 29.0 / 36, 1e-12);
  EXPECT_NEAR(m.recall, 29.0 / 36, 1e-12);
  EXPECT_NEAR(m.f1, 50.0 / 63, 1e-12);
}

TEST(Eval, ConfusionMatrixCountsPairs) {
  const std::vector<std::size_t> gold{0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  const std::vector<std::size_t> pred{0, 1, 0, 1, 1, 2, 1, 2, 0, 2, 2, 1};
  const auto cm = confusion_matrix(pred, gold, 3);
  EXPECT_EQ(to_nested(cm), (std::vector<std::vector<std::uint64_t>>{{2, 1, 0}, {0, 3, 1}, {1, 1, 3}}));
  std::uint64_t total = 0;
  for (auto v : cm.data()) total += v;
  EXPECT_EQ(total, 12u);
  EXPECT_THROW(confusion_matrix(std::vector<std::size_t>{0}, gold, 3), DimensionError);
  EXPECT_THROW(confusion_matrix(std::vector<std::size_t>{3}, std::vector<std::size_t>{0}, 3),
               ArgumentError);
}

TEST(Eval, MatchesTallyOracleOnRandomMatrices) {
  Xoshiro256 rng(77);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + rng.below(6);
    std::vector<std::vector<std::uint64_t>> rows(n, std::vector<std::uint64_t>(n));
    for (auto& r : rows)
      for (auto& v : r) v = rng.below(4) == 0 ? 0 : rng.below(20);
    const auto got = macro_metrics(from_nested(rows));
    const auto want = oracle::tally_metrics(rows);
    double p = 0, r = 0, f = 0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < n; ++c) {
      EXPECT_NEAR(got.per_class[c].precision, want[c].p, 1e-12);
      EXPECT_NEAR(got.per_class[c].recall, want[c].r, 1e-12);
      EXPECT_NEAR(got.per_class[c].f1, want[c].f1, 1e-12);
      EXPECT_EQ(got.per_class[c].support, want[c].support);
      if (want[c].support == 0) continue;
      p += want[c].p;
      r += want[c].r;
      f += want[c].f1;
      ++present;
    }
    if (present) {
      EXPECT_NEAR(got.precision, p / present, 1e-12);
      EXPECT_NEAR(got.recall, r / present, 1e-12);
      EXPECT_NEAR(got.f1, f / present, 1e-12);
    }
  }
}

TEST(Eval, AbsentClassesDoNotDiluteMacroAverage) {
  // Class 2 never occurs as gold nor prediction.
  const auto m = macro_metrics(from_nested({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}}));
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Eval, WeightedAveraging) {
  const auto cm = from_nested({{2, 1, 0}, {0, 3, 0}, {1, 0, 3}});
  const auto m = macro_metrics(cm, Averaging::weighted);
  EXPECT_NEAR(m.recall, (3 * (2.0 / 3) + 3 * 1.0 + 4 * 0.75) / 10, 1e-12);
  EXPECT_NEAR(m.recall, 0.8, 1e-12);
}

TEST(Eval, Accuracy) {
  const std::vector<std::size_t> g{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const std::vector<std::size_t> p{0, 1, 2, 0, 1, 2, 0, 1, 0, 1};
  EXPECT_NEAR(accuracy_at_1(p, g), 0.8, 1e-15);
  EXPECT_THROW(accuracy_at_1(std::vector<std::size_t>{}, std::vector<std::size_t>{}),
               ArgumentError);
  EXPECT_THROW(accuracy_at_1(p, std::vector<std::size_t>{0}), DimensionError);
}

TEST(Eval, InvariantToSamplePermutation) {
  Xoshiro256 rng(3);
  std::vector<std::size_t> g(100), p(100);
  for (std::size_t i = 0; i < 100; ++i) {
    g[i] = rng.below(5);
    p[i] = rng.below(3) ? g[i] : rng.below(5);
  }
  const LabelSpace ls("style", {"a", "b", "c", "d", "e"});
  const auto base = evaluate(p, g, ls, "m");
  EXPECT_EQ(base.total(), 100u);
  std::vector<std::size_t> order(100);
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<std::size_t> g2, p2;
  for (auto i : order) {
    g2.push_back(g[i]);
    p2.push_back(p[i]);
  }
  const auto perm = evaluate(p2, g2, ls, "m");
  EXPECT_EQ(perm.confusion, base.confusion);
  EXPECT_EQ(perm.f1, base.f1);
  EXPECT_EQ(perm.acc1, base.acc1);
}

TEST(Eval, FormatPercent) {
  EXPECT_EQ(format_percent(1.0), "100.0");
  EXPECT_EQ(format_percent(0.0), "0.0");
  EXPECT_EQ(format_percent(0.84925), "84.9");
  EXPECT_EQ(format_percent(0.8), "80.0");
  EXPECT_EQ(format_percent(29.0 / 36), "80.6");
}

TEST(Eval, RenderReport) {
  const LabelSpace ls("style", {"a", "b"});
  const std::vector<std::size_t> y{0, 1, 1};
  const auto r = evaluate(y, y, ls, "knn");
  const auto table = render_report({r}, {"knn", "linear"});
  EXPECT_NE(table.find("style"), std::string::npos);
  EXPECT_NE(table.find("acc@1"), std::string::npos);
  const auto knn_line = table.substr(table.find("\nknn"));
  EXPECT_NE(knn_line.find("100.0  100.0  100.0  100.0"), std::string::npos) << table;
  EXPECT_NE(table.find("linear"), std::string::npos);

  const auto header_only = render_report({}, {});
  EXPECT_EQ(std::count(header_only.begin(), header_only.end(), '\n'), 3);
  EXPECT_NE(header_only.find("Model"), std::string::npos);
}

TEST(Eval, ReportJsonRoundtrip) {
  const LabelSpace ls("genre", {"a", "b", "c"});
  const std::vector<std::size_t> g{0, 1, 2, 2}, p{0, 2, 2, 1};
  const auto r = evaluate(p, g, ls, "zeroshot");
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.model, r.model);
  EXPECT_EQ(back.task, r.task);
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.f1, r.f1);
  EXPECT_EQ(back.acc1, r.acc1);
  EXPECT_EQ(back.per_class.size(), 3u);
  EXPECT_THROW(report_from_json(nlohmann::json::object()), FormatError);
}

TEST(Eval, PredictionsFile) {
  const std::vector<Prediction> preds{{"x", "a", "a", 0.9}, {"y", std::nullopt, "b", 0.4},
                                      {"z", "b", "a", 0.5}};
  const auto back = decode_predictions(encode_predictions(preds));
  EXPECT_EQ(back, preds);
  const auto r = evaluate_predictions(preds, LabelSpace("style", {"a", "b"}), "m");
  EXPECT_EQ(r.total(), 2u);
  EXPECT_EQ(r.acc1, 0.5);
  EXPECT_THROW(decode_predictions("{\"id\": 1}\n"), FormatError);
}
