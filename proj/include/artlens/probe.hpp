#ifndef ARTLENS_PROBE_HPP
#define ARTLENS_PROBE_HPP

// Linear probe: softmax regression over frozen embeddings, trained with mean
// cross-entropy, Adam with bias correction, decoupled weight decay on the
// weights (not the bias) and early stopping on validation loss.
//
// Parameters and optimizer state are double precision; features stay float32.
// Checkpoints (PRB1) store float32 parameters:
//
//   "PRB1" | u32 N | u32 D | N*D float32 W (row-major) | N float32 b
//   u64 byte length L | L bytes of JSON {config, task, classes, labelspace_hash, ...}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "store.hpp"

namespace artlens {

inline constexpr std::string_view kProbeMagic = "PRB1";

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  std::size_t batch_size = 1024;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be non-negative");
    if (batch_size == 0) throw ArgumentError("batch_size must be positive");
    if (max_epochs == 0) throw ArgumentError("max_epochs must be positive");
    if (patience == 0 || patience > max_epochs)
      throw ArgumentError("patience must be in [1, max_epochs]");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw ArgumentError("Adam betas must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw ArgumentError("Adam epsilon must be positive");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},       {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"seed", c.seed},
          {"beta1", c.beta1},                 {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  return c;
}

/// z = W f + b over a fixed label space.
class LinearProbe {
public:
  LinearProbe() = default;
  LinearProbe(LabelSpace labelspace, std::size_t dim)
      : labelspace_(std::move(labelspace)), weights_(labelspace_.size(), dim, 0.0),
        bias_(labelspace_.size(), 0.0) {
    if (dim == 0) throw ArgumentError("probe dim must be positive");
  }

  const LabelSpace& labelspace() const noexcept { return labelspace_; }
  std::size_t classes() const noexcept { return weights_.rows(); }
  std::size_t dim() const noexcept { return weights_.cols(); }

  Matrix<double>& weights() noexcept { return weights_; }
  const Matrix<double>& weights() const noexcept { return weights_; }
  std::vector<double>& bias() noexcept { return bias_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  bool finite() const {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(weights_.data().begin(), weights_.data().end(), ok) &&
           std::all_of(bias_.begin(), bias_.end(), ok);
  }

private:
  LabelSpace labelspace_;
  Matrix<double> weights_;
  std::vector<double> bias_;
};

template <typename T>
std::vector<double> forward(const LinearProbe& probe, std::span<const T> f) {
  if (f.size() != probe.dim())
    throw DimensionError("probe expects dim " + std::to_string(probe.dim()) + ", got " +
                         std::to_string(f.size()));
  std::vector<double> z(probe.classes());
  for (std::size_t c = 0; c < z.size(); ++c) {
    const auto w = probe.weights().row(c);
    double acc = probe.bias()[c];
    for (std::size_t j = 0; j < f.size(); ++j) acc += w[j] * static_cast<double>(f[j]);
    z[c] = acc;
  }
  return z;
}

template <typename T>
std::vector<double> forward(const LinearProbe& probe, const std::vector<T>& f) {
  return forward(probe, std::span<const T>(f));
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> z) {
  if (z.empty()) throw ArgumentError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] > z[best]) best = i;
  return best;
}

/// log-sum-exp with max subtraction.
inline double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> z) {
  const double lse = log_sum_exp(z);
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i] - lse);
  return p;
}

template <typename T>
std::size_t predict(const LinearProbe& probe, std::span<const T> f) {
  const auto z = forward(probe, f);
  return argmax(z);
}

template <typename T>
std::size_t predict(const LinearProbe& probe, const std::vector<T>& f) {
  return predict(probe, std::span<const T>(f));
}

/// Features with class indices resolved against a label space.
struct LabeledData {
  Matrix<float> features;
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

inline LabeledData make_labeled(const EmbeddingSet& set, const std::string& task,
                                const LabelSpace& labelspace) {
  LabeledData out{set.vectors(), {}};
  out.labels.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i)
    out.labels.push_back(static_cast<std::uint32_t>(labelspace.index_of(set.label(i, task))));
  return out;
}

struct Gradients {
  Matrix<double> weights;
  std::vector<double> bias;
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
  /// Samples in the batch whose argmax logit matched the label.
  std::size_t correct = 0;
};

namespace detail {

inline void check_batch(const LinearProbe& probe, const LabeledData& data,
                        std::span<const std::size_t> rows) {
  if (rows.empty()) throw ArgumentError("empty batch");
  if (data.features.cols() != probe.dim())
    throw DimensionError("feature dim " + std::to_string(data.features.cols()) +
                         " does not match probe dim " + std::to_string(probe.dim()));
  for (auto r : rows) {
    if (r >= data.size()) throw ArgumentError("batch row out of range");
    if (data.labels[r] >= probe.classes())
      throw ArgumentError("label " + std::to_string(data.labels[r]) + " out of range for " +
                          std::to_string(probe.classes()) + " classes");
  }
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

} // namespace detail

/// Mean cross-entropy over `rows` and its exact gradient.
inline LossAndGrad loss_and_grad(const LinearProbe& probe, const LabeledData& data,
                                 std::span<const std::size_t> rows) {
  detail::check_batch(probe, data, rows);
  const std::size_t n_cls = probe.classes();
  const std::size_t dim = probe.dim();
  const double inv_batch = 1.0 / static_cast<double>(rows.size());

  LossAndGrad out{0.0, {Matrix<double>(n_cls, dim, 0.0), std::vector<double>(n_cls, 0.0)}, 0};
  for (auto r : rows) {
    const auto x = data.features.row(r);
    const auto y = data.labels[r];
    auto z = forward(probe, x);
    if (argmax(z) == y) ++out.correct;
    const double lse = log_sum_exp(z);
    out.loss += lse - z[y];
    for (std::size_t c = 0; c < n_cls; ++c) {
      double dz = std::exp(z[c] - lse);
      if (c == y) dz -= 1.0;
      dz *= inv_batch;
      out.grad.bias[c] += dz;
      auto g = out.grad.weights.row(c);
      for (std::size_t j = 0; j < dim; ++j) g[j] += dz * static_cast<double>(x[j]);
    }
  }
  out.loss *= inv_batch;
  return out;
}

inline LossAndGrad loss_and_grad(const LinearProbe& probe, const LabeledData& data) {
  const auto rows = detail::all_rows(data.size());
  return loss_and_grad(probe, data, rows);
}

/// Mean cross-entropy without gradients.
inline double mean_loss(const LinearProbe& probe, const LabeledData& data,
                        std::span<const std::size_t> rows) {
  detail::check_batch(probe, data, rows);
  double total = 0.0;
  for (auto r : rows) {
    const auto z = forward(probe, data.features.row(r));
    total += log_sum_exp(z) - z[data.labels[r]];
  }
  return total / static_cast<double>(rows.size());
}

inline double mean_loss(const LinearProbe& probe, const LabeledData& data) {
  const auto rows = detail::all_rows(data.size());
  return mean_loss(probe, data, rows);
}

inline double accuracy(const LinearProbe& probe, const LabeledData& data) {
  if (data.size() == 0) throw ArgumentError("accuracy of an empty set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    hit += predict(probe, data.features.row(i)) == data.labels[i];
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  Matrix<double> m_weights, v_weights;
  std::vector<double> m_bias, v_bias;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const LinearProbe& probe)
      : m_weights(probe.classes(), probe.dim(), 0.0), v_weights(probe.classes(), probe.dim(), 0.0),
        m_bias(probe.classes(), 0.0), v_bias(probe.classes(), 0.0) {}
};

/// One Adam update over a flat parameter block at step t (1-based):
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
///   theta <- theta - lr * decay * theta
inline void adam_update(std::span<double> theta, std::span<const double> grad,
                        std::span<double> m, std::span<double> v, std::uint64_t t,
                        const TrainConfig& cfg, double decay) {
  if (theta.size() != grad.size() || m.size() != theta.size() || v.size() != theta.size())
    throw DimensionError("adam: parameter/gradient/state shapes differ");
  const double td = static_cast<double>(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, td);
  const double bc2 = 1.0 - std::pow(cfg.beta2, td);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    theta[i] -= cfg.learning_rate * decay * theta[i];
  }
}

/// Advances the step counter, then updates W (with weight decay) and b
/// (without).
inline void adam_step(LinearProbe& probe, const Gradients& grad, AdamState& state,
                      const TrainConfig& cfg) {
  auto finite = [](double g) { return std::isfinite(g); };
  if (!std::all_of(grad.weights.data().begin(), grad.weights.data().end(), finite) ||
      !std::all_of(grad.bias.begin(), grad.bias.end(), finite))
    throw TrainingError("adam: non-finite gradient");
  if (grad.weights.rows() != probe.classes() || grad.weights.cols() != probe.dim() ||
      grad.bias.size() != probe.classes())
    throw DimensionError("adam: gradient shape does not match probe");
  if (state.m_bias.size() != probe.classes()) state = AdamState(probe);
  ++state.step;
  adam_update(probe.weights().data(), grad.weights.data(), state.m_weights.data(),
              state.v_weights.data(), state.step, cfg, cfg.weight_decay);
  adam_update(probe.bias(), grad.bias, state.m_bias, state.v_bias, state.step, cfg, 0.0);
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  std::size_t epoch = 0;
  /// Mean of minibatch losses weighted by batch size, before each update.
  double train_loss = 0.0;
  /// Fraction of minibatch samples classified correctly before each update.
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  std::size_t epochs_run() const noexcept { return epochs.size(); }
};

inline nlohmann::json to_json(const TrainHistory& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  return {{"best_epoch", h.best_epoch}, {"stopped_early", h.stopped_early}, {"epochs", epochs}};
}

struct TrainResult {
  LinearProbe probe;
  TrainHistory history;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

/// Zero-initialised probe trained on seeded per-epoch permutations in
/// minibatches of batch_size (the last one may be short). After every epoch
/// the validation loss is measured; training stops at max_epochs or after
/// `patience` consecutive epochs without a strict improvement, and the
/// checkpoint with the lowest validation loss is returned.
inline TrainResult train_probe(const LabeledData& train, const LabeledData& val,
                               const LabelSpace& labelspace, const TrainConfig& cfg,
                               const EpochObserver& observer = {}) {
  cfg.validate();
  if (train.size() == 0) throw ArgumentError("training split is empty");
  if (val.size() == 0) throw ArgumentError("validation split is empty");
  if (train.features.cols() != val.features.cols())
    throw DimensionError("train/val feature dims differ");

  LinearProbe probe(labelspace, train.features.cols());
  AdamState state(probe);
  Xoshiro256 rng(cfg.seed);

  TrainResult best{probe, {}};
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train.size());
  const auto val_rows = detail::all_rows(val.size());

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto len = std::min(cfg.batch_size, order.size() - start);
      const auto batch = std::span<const std::size_t>(order).subspan(start, len);
      auto step = loss_and_grad(probe, train, batch);
      if (!std::isfinite(step.loss)) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "training loss became non-finite at epoch %zu, batch %zu",
                      epoch, start / cfg.batch_size + 1);
        throw TrainingError(msg);
      }
      loss_sum += step.loss * static_cast<double>(len);
      correct += step.correct;
      adam_step(probe, step.grad, state, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.val_loss = mean_loss(probe, val, val_rows);
    rec.val_accuracy = accuracy(probe, val);
    if (!std::isfinite(rec.val_loss))
      throw TrainingError("validation loss became non-finite at epoch " + std::to_string(epoch));
    best.history.epochs.push_back(rec);
    if (observer) observer(rec);

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best.probe = probe;
      best.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      best.history.stopped_early = true;
      break;
    }
  }
  return best;
}

inline TrainResult train_probe(const EmbeddingSet& train, const EmbeddingSet& val,
                               const std::string& task, const LabelSpace& labelspace,
                               const TrainConfig& cfg, const EpochObserver& observer = {}) {
  return train_probe(make_labeled(train, task, labelspace), make_labeled(val, task, labelspace),
                     labelspace, cfg, observer);
}

// ---------------------------------------------------------------------------
// PRB1 checkpoints

inline std::string encode_probe(const LinearProbe& probe, const TrainConfig& cfg,
                                const nlohmann::json& extra = nlohmann::json::object()) {
  if (!probe.finite()) throw InvariantError("probe has non-finite parameters");
  detail::ByteWriter w;
  w.raw(kProbeMagic);
  w.u32(static_cast<std::uint32_t>(probe.classes()));
  w.u32(static_cast<std::uint32_t>(probe.dim()));
  std::vector<float> wf(probe.weights().data().begin(), probe.weights().data().end());
  std::vector<float> bf(probe.bias().begin(), probe.bias().end());
  w.f32(wf);
  w.f32(bf);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(probe.labelspace().fingerprint()));
  nlohmann::json footer = extra;
  footer["config"] = to_json(cfg);
  footer["task"] = probe.labelspace().task();
  footer["classes"] = probe.labelspace().classes();
  footer["labelspace_hash"] = hash;
  const auto text = footer.dump();
  w.u64(text.size());
  w.raw(text);
  return w.bytes();
}

struct ProbeCheckpoint {
  LinearProbe probe;
  TrainConfig config;
  nlohmann::json footer;
};

inline ProbeCheckpoint decode_probe(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4, "magic") != kProbeMagic)
    throw FormatError("bad magic: not a PRB1 probe checkpoint");
  const std::size_t n = r.u32("header");
  const std::size_t d = r.u32("header");
  std::vector<float> wf(n * d), bf(n);
  r.f32(wf, "weights");
  r.f32(bf, "bias");
  const auto len = r.u64("footer length");
  if (len != r.remaining()) throw FormatError("PRB1 footer length does not match file size");
  ProbeCheckpoint out;
  try {
    out.footer = nlohmann::json::parse(r.raw(len, "footer"));
    LabelSpace ls(out.footer.at("task").get<std::string>(),
                  out.footer.at("classes").get<std::vector<std::string>>());
    if (ls.size() != n) throw FormatError("PRB1 class list does not match N");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(ls.fingerprint()));
    if (out.footer.at("labelspace_hash").get<std::string>() != hash)
      throw FormatError("PRB1 label space hash mismatch");
    out.config = train_config_from_json(out.footer.at("config"));
    out.probe = LinearProbe(std::move(ls), d);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed PRB1 footer: ") + e.what());
  }
  std::copy(wf.begin(), wf.end(), out.probe.weights().data().begin());
  std::copy(bf.begin(), bf.end(), out.probe.bias().begin());
  return out;
}

inline void write_probe(const LinearProbe& probe, const TrainConfig& cfg,
                        const std::filesystem::path& path,
                        const nlohmann::json& extra = nlohmann::json::object()) {
  detail::write_file(path, encode_probe(probe, cfg, extra));
}

inline ProbeCheckpoint read_probe(const std::filesystem::path& path) {
  return decode_probe(detail::read_file(path));
}

} // namespace artlens

#endif // ARTLENS_PROBE_HPP
