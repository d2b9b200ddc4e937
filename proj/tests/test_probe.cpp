#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include <artlens/probe.hpp>

#include "oracles.hpp"

using namespace artlens;

namespace {

LabelSpace classes(std::size_t n) {
  std::vector<std::string> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back("c" + std::to_string(i));
  return LabelSpace("style", c);
}

std::vector<std::vector<double>> nested(const Matrix<double>& w) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < w.rows(); ++r) out.emplace_back(w.row(r).begin(), w.row(r).end());
  return out;
}

LabeledData labeled_random(Xoshiro256& rng, std::size_t n, std::size_t dim, std::size_t n_cls,
                        oracle::Rows* rows = nullptr) {
  const auto r = oracle::random_rows(rng, n, dim);
  LabeledData d{oracle::to_matrix(r), {}};
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(std::uint32_t(rng.below(n_cls)));
  if (rows) *rows = r;
  return d;
}

void randomize(LinearProbe& p, Xoshiro256& rng, double scale) {
  for (auto& w : p.weights().data()) w = scale * rng.normal();
  for (auto& b : p.bias()) b = scale * rng.normal();
}

} // namespace

TEST(Probe, ForwardZeroAndIdentity) {
  LinearProbe p(classes(3), 3);
  const std::vector<float> f{0.5f, -2.0f, 4.0f};
  EXPECT_EQ(forward(p, f), (std::vector<double>{0, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) p.weights()(i, i) = 1.0;
  p.bias() = {1.0, 0.0, -1.0};
  EXPECT_EQ(forward(p, f), (std::vector<double>{1.5, -2.0, 3.0}));
  EXPECT_THROW(forward(p, std::vector<float>{1, 2}), DimensionError);
}

TEST(Probe, ForwardMatchesMatvecOracle) {
  Xoshiro256 rng(3);
  LinearProbe p(classes(5), 7);
  randomize(p, rng, 1.0);
  for (int i = 0; i < 20; ++i) {
    const auto f = oracle::random_vec(rng, 7);
    const auto got = forward(p, f);
    const auto want = oracle::matvec(nested(p.weights()), p.bias(), f);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(got[c], want[c], 1e-12);
  }
}

TEST(Probe, ZeroInitLossIsLogN) {
  for (std::size_t n : {2u, 4u, 27u}) {
    Xoshiro256 rng(n);
    const auto data = labeled_random(rng, 30, 6, n);
    const LinearProbe p(classes(n), 6);
    EXPECT_NEAR(loss_and_grad(p, data).loss, std::log(double(n)), 1e-12);
    EXPECT_NEAR(mean_loss(p, data), std::log(double(n)), 1e-12);
  }
  EXPECT_NEAR(std::log(4.0), 1.3862943611198906, 1e-15);
}

TEST(Probe, LargeLogitsStayFinite) {
  LinearProbe p(classes(2), 1);
  p.bias() = {1000.0, -1000.0};
  LabeledData d{oracle::to_matrix({{1.0f}, {1.0f}}), {0, 1}};
  const auto lg = loss_and_grad(p, d);
  EXPECT_TRUE(std::isfinite(lg.loss));
  EXPECT_NEAR(lg.loss, 1000.0, 1e-9);  // mean of ~0 and 2000
  for (double g : lg.grad.bias) EXPECT_TRUE(std::isfinite(g));
}

TEST(Probe, SoftmaxSumsToOne) {
  Xoshiro256 rng(4);
  for (double scale : {1.0, 100.0, 1e4}) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> z(6);
      for (auto& v : z) v = scale * (2.0 * rng.uniform() - 1.0);
      const auto p = softmax(z);
      double s = 0.0;
      for (double v : p) {
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
      std::vector<double> shifted(z);
      for (auto& v : shifted) v += 37.0;
      const auto q = softmax(shifted);
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], q[i], 1e-9);
    }
  }
}

TEST(Probe, GradientMatchesFiniteDifferences) {
  Xoshiro256 rng(20);
  oracle::Rows xs;
  const auto data = labeled_random(rng, 12, 5, 4, &xs);
  LinearProbe p(classes(4), 5);
  randomize(p, rng, 0.3);
  const auto lg = loss_and_grad(p, data);
  EXPECT_NEAR(lg.loss, oracle::cross_entropy(nested(p.weights()), p.bias(), xs, data.labels),
              1e-12);

  const double h = 1e-4;
  for (int t = 0; t < 20; ++t) {
    const bool bias = t % 5 == 4;
    const std::size_t c = rng.below(4), j = rng.below(5);
    auto w = nested(p.weights());
    auto b = p.bias();
    double& theta = bias ? b[c] : w[c][j];
    const double orig = theta;
    theta = orig + h;
    const double up = oracle::cross_entropy(w, b, xs, data.labels);
    theta = orig - h;
    const double down = oracle::cross_entropy(w, b, xs, data.labels);
    const double numeric = (up - down) / (2 * h);
    const double analytic = bias ? lg.grad.bias[c] : lg.grad.weights(c, j);
    const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric) + std::abs(analytic));
    EXPECT_LT(rel, 1e-5) << "param " << t;
  }
}

TEST(Probe, BatchErrors) {
  LinearProbe p(classes(2), 2);
  LabeledData d{oracle::to_matrix({{1, 0}}), {5}};
  EXPECT_THROW(loss_and_grad(p, d), ArgumentError);
  LabeledData empty{Matrix<float>(0, 2), {}};
  EXPECT_THROW(loss_and_grad(p, empty), ArgumentError);
  LabeledData wide{oracle::to_matrix({{1, 0, 0}}), {0}};
  EXPECT_THROW(loss_and_grad(p, wide), DimensionError);
}

TEST(Probe, AdamFirstStepMovesByLearningRate) {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.0;
  LinearProbe p(classes(2), 2);
  Gradients g{Matrix<double>(2, 2, 0.0), {0.3, -7.0}};
  g.weights(0, 1) = 1e-3;
  AdamState s(p);
  adam_step(p, g, s, cfg);
  EXPECT_EQ(s.step, 1u);
  // First bias-corrected step is lr * g / (|g| + eps).
  EXPECT_NEAR(p.bias()[0], -0.01, 1e-8);
  EXPECT_NEAR(p.bias()[1], 0.01, 1e-8);
  EXPECT_NEAR(p.weights()(0, 1), -0.01, 1e-6);
  EXPECT_EQ(p.weights()(0, 0), 0.0);
}

TEST(Probe, AdamZeroGradientFixedPointWithoutDecay) {
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  Xoshiro256 rng(5);
  LinearProbe p(classes(3), 4);
  randomize(p, rng, 1.0);
  const auto before = p.weights();
  const auto bias = p.bias();
  AdamState s(p);
  Gradients g{Matrix<double>(3, 4, 0.0), std::vector<double>(3, 0.0)};
  for (int i = 0; i < 5; ++i) adam_step(p, g, s, cfg);
  EXPECT_EQ(p.weights(), before);
  EXPECT_EQ(p.bias(), bias);
}

TEST(Probe, AdamMatchesScalarOracle) {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.1;
  Xoshiro256 rng(6);
  LinearProbe p(classes(2), 4);
  randomize(p, rng, 1.0);
  std::vector<oracle::ScalarAdam> w_ref, b_ref;
  std::vector<double> w_val(p.weights().data().begin(), p.weights().data().end());
  std::vector<double> b_val(p.bias());
  for (std::size_t i = 0; i < w_val.size(); ++i)
    w_ref.push_back({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, cfg.weight_decay});
  for (std::size_t i = 0; i < b_val.size(); ++i)
    b_ref.push_back({cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, 0.0});
  AdamState s(p);
  for (int step = 0; step < 10; ++step) {
    Gradients g{Matrix<double>(2, 4, 0.0), std::vector<double>(2, 0.0)};
    for (auto& v : g.weights.data()) v = rng.normal();
    for (auto& v : g.bias) v = rng.normal();
    adam_step(p, g, s, cfg);
    for (std::size_t i = 0; i < w_val.size(); ++i)
      w_val[i] = w_ref[i].step(w_val[i], g.weights.data()[i]);
    for (std::size_t i = 0; i < b_val.size(); ++i) b_val[i] = b_ref[i].step(b_val[i], g.bias[i]);
  }
  for (std::size_t i = 0; i < w_val.size(); ++i)
    EXPECT_NEAR(p.weights().data()[i], w_val[i], 1e-12);
  for (std::size_t i = 0; i < b_val.size(); ++i) EXPECT_NEAR(p.bias()[i], b_val[i], 1e-12);
}

TEST(Probe, AdamRejectsNonFiniteGradient) {
  LinearProbe p(classes(2), 1);
  AdamState s(p);
  Gradients g{Matrix<double>(2, 1, 0.0), {std::numeric_limits<double>::quiet_NaN(), 0.0}};
  EXPECT_THROW(adam_step(p, g, s, TrainConfig{}), TrainingError);
}

TEST(Probe, PredictArgmaxAndTies) {
  LinearProbe p(classes(3), 2);
  EXPECT_EQ(predict(p, std::vector<float>{1, 1}), 0u);
  p.weights()(2, 0) = 1.0;
  EXPECT_EQ(predict(p, std::vector<float>{1, 0}), 2u);
  p.bias() = {5.0, 5.0, 5.0};
  EXPECT_EQ(predict(p, std::vector<float>{-1, 0}), 0u);
  p.bias() = {0.0, 0.25, 0.25};
  EXPECT_EQ(predict(p, std::vector<float>{0, 0}), 1u);
}

TEST(Probe, PredictionInvariantToLogitShift) {
  Xoshiro256 rng(7);
  LinearProbe p(classes(4), 3);
  randomize(p, rng, 1.0);
  auto shifted = p;
  for (auto& b : shifted.bias()) b += 12.5;
  for (int i = 0; i < 50; ++i) {
    const auto f = oracle::random_vec(rng, 3);
    EXPECT_EQ(predict(p, f), predict(shifted, f));
  }
}

TEST(Probe, TinyLearningRateBarelyMoves) {
  Xoshiro256 rng(8);
  const auto train = labeled_random(rng, 40, 4, 3);
  const auto val = labeled_random(rng, 10, 4, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e-12;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  const auto r = train_probe(train, val, classes(3), cfg);
  for (double w : r.probe.weights().data()) EXPECT_LT(std::abs(w), 1e-10);
  EXPECT_NEAR(r.history.epochs[0].val_loss, std::log(3.0), 1e-9);
}

TEST(Probe, EarlyStoppingKeepsBestCheckpoint) {
  // Validation labels are a permutation of the training labels, so every
  // epoch that fits the training set makes the validation loss worse.
  const auto blobs = oracle::make_blobs(1, 4, 8, 6.0, 200, 40);
  const auto ls = LabelSpace("style", blobs.classes);
  const auto train = make_labeled(blobs.train, "style", ls);
  auto val = make_labeled(blobs.val, "style", ls);
  for (auto& y : val.labels) y = (y + 1) % 4;

  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.patience = 5;
  const auto r = train_probe(train, val, ls, cfg);
  ASSERT_EQ(r.history.epochs_run(), cfg.patience + 1);
  EXPECT_TRUE(r.history.stopped_early);
  EXPECT_EQ(r.history.best_epoch, 1u);
  for (std::size_t e = 1; e < r.history.epochs.size(); ++e)
    EXPECT_GT(r.history.epochs[e].val_loss, r.history.epochs[0].val_loss);
  EXPECT_NEAR(mean_loss(r.probe, val), r.history.epochs[0].val_loss, 1e-12);

  cfg.max_epochs = 1;
  cfg.patience = 1;
  const auto one = train_probe(train, val, ls, cfg);
  EXPECT_EQ(one.probe.weights(), r.probe.weights());
  EXPECT_EQ(one.probe.bias(), r.probe.bias());
}

TEST(Probe, TrainingIsDeterministic) {
  const auto blobs = oracle::make_blobs(2, 3, 8, 4.0, 120, 30);
  const auto ls = LabelSpace("style", blobs.classes);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 16;
  cfg.max_epochs = 8;
  const auto a = train_probe(blobs.train, blobs.val, "style", ls, cfg);
  const auto b = train_probe(blobs.train, blobs.val, "style", ls, cfg);
  EXPECT_EQ(a.probe.weights(), b.probe.weights());
  EXPECT_EQ(a.probe.bias(), b.probe.bias());
  EXPECT_EQ(to_json(a.history), to_json(b.history));
  cfg.seed = 43;
  const auto c = train_probe(blobs.train, blobs.val, "style", ls, cfg);
  EXPECT_NE(a.probe.weights(), c.probe.weights());
}

TEST(Probe, ConfigValidation) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.patience = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.learning_rate = -1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 77;
  EXPECT_EQ(to_json(train_config_from_json(to_json(cfg))), to_json(cfg));
}

TEST(Probe, CheckpointRoundtrip) {
  Xoshiro256 rng(9);
  LinearProbe p(classes(3), 5);
  randomize(p, rng, 1.0);
  for (auto& w : p.weights().data()) w = double(float(w));
  for (auto& b : p.bias()) b = double(float(b));
  TrainConfig cfg;
  cfg.seed = 7;
  const auto path = std::filesystem::temp_directory_path() / "artlens_probe.prb";
  write_probe(p, cfg, path, {{"best_epoch", 4}});
  const auto back = read_probe(path);
  EXPECT_EQ(back.probe.weights(), p.weights());
  EXPECT_EQ(back.probe.bias(), p.bias());
  EXPECT_EQ(back.probe.labelspace(), p.labelspace());
  EXPECT_EQ(back.config.seed, 7u);
  EXPECT_EQ(back.footer.at("best_epoch"), 4);

  auto bytes = encode_probe(p, cfg);
  EXPECT_THROW(decode_probe(bytes.substr(0, 20)), FormatError);
  bytes[0] = 'X';
  EXPECT_THROW(decode_probe(bytes), FormatError);
  auto tampered = encode_probe(p, cfg);
  const auto pos = tampered.find("\"c1\"");
  ASSERT_NE(pos, std::string::npos);
  tampered[pos + 2] = '9';
  EXPECT_THROW(decode_probe(tampered), FormatError);
}

TEST(Probe, NonFiniteProbeCannotBeSaved) {
  LinearProbe p(classes(2), 1);
  p.bias()[0] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(p.finite());
  EXPECT_THROW(encode_probe(p, TrainConfig{}), InvariantError);
}
