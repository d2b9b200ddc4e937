#ifndef ARTLENS_STORE_HPP
#define ARTLENS_STORE_HPP

// Embedding persistence (EMB1), label spaces, label filtering and
// deterministic stratified splitting.
//
// EMB1 layout, all integers little-endian:
//
//   "EMB1" | u32 version = 1 | u32 count | u32 dim
//   count*dim float32, row-major
//   u64 byte length L | L bytes of UTF-8 JSON lines
//
// The JSON-lines block holds an optional header line {"header": {k: v, ...}}
// followed by exactly `count` row lines {"id": str, "labels": {task: label}}.
// Nothing may follow the block.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "error.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace artlens {

inline constexpr std::string_view kStoreMagic = "EMB1";
inline constexpr std::uint32_t kStoreVersion = 1;

struct RowMeta {
  std::string id;
  std::map<std::string, std::string> labels;

  friend bool operator==(const RowMeta&, const RowMeta&) = default;
};

/// Ordered class list for one task. The order is the index order used by
/// logits, prompt banks and confusion matrices.
class LabelSpace {
public:
  LabelSpace() = default;
  LabelSpace(std::string task, std::vector<std::string> classes)
      : task_(std::move(task)), classes_(std::move(classes)) {
    if (classes_.size() < 2)
      throw InvariantError("label space '" + task_ + "' needs at least 2 classes");
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (!index_.emplace(classes_[i], i).second)
        throw InvariantError("duplicate class '" + classes_[i] + "' in label space '" + task_ + "'");
    }
  }

  const std::string& task() const noexcept { return task_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const std::string& name(std::size_t index) const { return classes_.at(index); }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& label) const {
    if (auto i = find(label)) return *i;
    throw InvariantError("label '" + label + "' is not in label space '" + task_ + "'");
  }

  /// Stable fingerprint of task name and class order.
  std::uint64_t fingerprint() const {
    nlohmann::json j = {{"task", task_}, {"classes", classes_}};
    return detail::fnv1a64(j.dump());
  }

  friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
    return a.task_ == b.task_ && a.classes_ == b.classes_;
  }

private:
  std::string task_;
  std::vector<std::string> classes_;
  std::map<std::string, std::size_t> index_;
};

/// N x D float32 embeddings plus one metadata record per row.
class EmbeddingSet {
public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dim) : vectors_(0, dim) {
    if (dim == 0) throw InvariantError("embedding dim must be positive");
  }

  std::size_t count() const noexcept { return meta_.size(); }
  std::size_t dim() const noexcept { return vectors_.cols(); }
  const Matrix<float>& vectors() const noexcept { return vectors_; }
  std::span<const float> vector(std::size_t row) const noexcept { return vectors_.row(row); }
  const std::vector<RowMeta>& meta() const noexcept { return meta_; }
  const RowMeta& meta(std::size_t row) const { return meta_.at(row); }

  /// Free-form header attributes (prompt banks record task and template here).
  std::map<std::string, std::string>& attributes() noexcept { return attributes_; }
  const std::map<std::string, std::string>& attributes() const noexcept { return attributes_; }

  /// Append a row, enforcing the non-empty/unique id and non-zero/finite
  /// vector invariants.
  void add(RowMeta meta, std::span<const float> values) {
    if (values.size() != dim())
      throw DimensionError("row '" + meta.id + "' has length " + std::to_string(values.size()) +
                           ", expected " + std::to_string(dim()));
    if (meta.id.empty()) throw InvariantError("row id must be non-empty");
    check_vector(meta.id, values);
    if (!ids_.insert(meta.id).second) throw InvariantError("duplicate id '" + meta.id + "'");
    vectors_.push_row(values);
    meta_.push_back(std::move(meta));
  }

  /// Label of `row` for `task`, or throws if the row has no such label.
  const std::string& label(std::size_t row, const std::string& task) const {
    const auto& labels = meta_.at(row).labels;
    auto it = labels.find(task);
    if (it == labels.end())
      throw InvariantError("row '" + meta_[row].id + "' has no label for task '" + task + "'");
    return it->second;
  }

  bool has_task(const std::string& task) const {
    return std::any_of(meta_.begin(), meta_.end(),
                       [&](const RowMeta& m) { return m.labels.contains(task); });
  }

  /// New set holding the given rows, in the given order.
  EmbeddingSet select(std::span<const std::size_t> rows) const {
    EmbeddingSet out(dim());
    out.attributes_ = attributes_;
    out.vectors_.reserve_rows(rows.size());
    for (auto r : rows) out.add(meta_.at(r), vectors_.row(r));
    return out;
  }

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.vectors_ == b.vectors_ && a.meta_ == b.meta_ && a.attributes_ == b.attributes_;
  }

private:
  static void check_vector(const std::string& id, std::span<const float> values) {
    bool nonzero = false;
    for (float v : values) {
      if (!std::isfinite(v)) throw InvariantError("row '" + id + "' has a non-finite entry");
      nonzero = nonzero || v != 0.0f;
    }
    if (!nonzero) throw InvariantError("row '" + id + "' is the zero vector");
  }

  Matrix<float> vectors_;
  std::vector<RowMeta> meta_;
  std::map<std::string, std::string> attributes_;
  std::unordered_set<std::string> ids_;
};

// ---------------------------------------------------------------------------
// EMB1 encode / decode

inline std::string encode_store(const EmbeddingSet& set) {
  if (set.count() > UINT32_MAX || set.dim() > UINT32_MAX)
    throw InvariantError("embedding set too large for EMB1");
  std::string lines;
  try {
    if (!set.attributes().empty()) {
      lines += nlohmann::json{{"header", set.attributes()}}.dump();
      lines += '\n';
    }
    for (const auto& m : set.meta()) {
      lines += nlohmann::json{{"id", m.id}, {"labels", m.labels}}.dump();
      lines += '\n';
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(std::string("metadata is not valid UTF-8: ") + e.what());
  }
  detail::ByteWriter w;
  w.raw(kStoreMagic);
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(set.count()));
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.f32(set.vectors().data());
  w.u64(lines.size());
  w.raw(lines);
  return w.bytes();
}

inline EmbeddingSet decode_store(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.remaining() < 4 || r.raw(4, "magic") != kStoreMagic)
    throw FormatError("bad magic: not an EMB1 file");
  const auto version = r.u32("header");
  if (version != kStoreVersion)
    throw FormatError("unsupported EMB1 version " + std::to_string(version));
  const std::size_t count = r.u32("header");
  const std::size_t dim = r.u32("header");
  if (dim == 0) throw FormatError("EMB1 header declares dim = 0");

  const std::size_t payload_bytes = count * dim * sizeof(float);
  if (r.remaining() < payload_bytes)
    throw FormatError("truncated payload: header declares " + std::to_string(count) + "x" +
                      std::to_string(dim) + " floats but only " +
                      std::to_string(r.remaining() / sizeof(float)) + " are present");
  std::vector<float> payload(count * dim);
  r.f32(payload, "payload");

  const auto meta_len = r.u64("metadata length");
  if (meta_len != r.remaining())
    throw FormatError("payload size does not match header: metadata block declares " +
                      std::to_string(meta_len) + " bytes, " + std::to_string(r.remaining()) +
                      " remain");
  const auto block = r.raw(meta_len, "metadata");

  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < block.size();) {
    auto nl = block.find('\n', pos);
    if (nl == std::string_view::npos) throw FormatError("metadata block not newline-terminated");
    lines.push_back(block.substr(pos, nl - pos));
    pos = nl + 1;
  }

  EmbeddingSet set(dim);
  std::size_t first = 0;
  try {
    if (!lines.empty()) {
      auto j = nlohmann::json::parse(lines[0]);
      if (j.contains("header")) {
        set.attributes() = j.at("header").get<std::map<std::string, std::string>>();
        first = 1;
      }
    }
    if (lines.size() - first != count)
      throw FormatError("metadata has " + std::to_string(lines.size() - first) +
                        " rows, header declares " + std::to_string(count));
    for (std::size_t i = 0; i < count; ++i) {
      auto j = nlohmann::json::parse(lines[first + i]);
      RowMeta m;
      m.id = j.at("id").get<std::string>();
      if (j.contains("labels")) m.labels = j.at("labels").get<std::map<std::string, std::string>>();
      set.add(std::move(m), std::span<const float>(payload).subspan(i * dim, dim));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed metadata line: ") + e.what());
  }
  return set;
}

inline void write_store(const EmbeddingSet& set, const std::filesystem::path& path) {
  detail::write_file(path, encode_store(set));
}

inline EmbeddingSet read_store(const std::filesystem::path& path) {
  return decode_store(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Label spaces and their companion JSON file: {"task": ["class", ...], ...}

/// Sorted distinct labels of `task` across the set.
inline LabelSpace derive_labelspace(const EmbeddingSet& set, const std::string& task) {
  std::set<std::string> seen;
  for (const auto& m : set.meta()) {
    if (auto it = m.labels.find(task); it != m.labels.end()) seen.insert(it->second);
  }
  return LabelSpace(task, {seen.begin(), seen.end()});
}

/// Every task appearing in the set, with at least two classes.
inline std::map<std::string, LabelSpace> derive_labelspaces(const EmbeddingSet& set) {
  std::set<std::string> tasks;
  for (const auto& m : set.meta())
    for (const auto& [task, label] : m.labels) tasks.insert(task);
  std::map<std::string, LabelSpace> out;
  for (const auto& task : tasks) {
    std::set<std::string> seen;
    for (const auto& m : set.meta())
      if (auto it = m.labels.find(task); it != m.labels.end()) seen.insert(it->second);
    if (seen.size() >= 2) out.emplace(task, LabelSpace(task, {seen.begin(), seen.end()}));
  }
  return out;
}

/// `train.emb` -> `train.labelspace`.
inline std::filesystem::path labelspace_path_for(const std::filesystem::path& store_path) {
  auto p = store_path;
  return p.replace_extension(".labelspace");
}

inline void write_labelspaces(const std::map<std::string, LabelSpace>& spaces,
                              const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [task, ls] : spaces) j[task] = ls.classes();
  detail::write_file(path, j.dump(2) + "\n");
}

inline std::map<std::string, LabelSpace> read_labelspaces(const std::filesystem::path& path) {
  std::map<std::string, LabelSpace> out;
  try {
    auto j = nlohmann::json::parse(detail::read_file(path));
    for (auto& [task, classes] : j.items())
      out.emplace(task, LabelSpace(task, classes.get<std::vector<std::string>>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed label space file " + path.string() + ": " + e.what());
  }
  return out;
}

inline LabelSpace read_labelspace(const std::filesystem::path& path, const std::string& task) {
  auto spaces = read_labelspaces(path);
  auto it = spaces.find(task);
  if (it == spaces.end())
    throw InvariantError("label space file " + path.string() + " has no task '" + task + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Filtering

/// Rows whose `task` label is not in `excluded`, in original order. Rows
/// without a label for `task` are kept.
inline EmbeddingSet filter_labels(const EmbeddingSet& set, const std::string& task,
                                  const std::set<std::string>& excluded) {
  if (set.count() > 0 && !set.has_task(task))
    throw ArgumentError("unknown task '" + task + "'");
  std::vector<std::size_t> keep;
  keep.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i) {
    const auto& labels = set.meta(i).labels;
    auto it = labels.find(task);
    if (it == labels.end() || !excluded.contains(it->second)) keep.push_back(i);
  }
  return set.select(keep);
}

// ---------------------------------------------------------------------------
// Splitting

enum class SplitTag : std::uint8_t { train, val, test };

inline std::string_view to_string(SplitTag t) noexcept {
  switch (t) {
    case SplitTag::train: return "train";
    case SplitTag::val: return "val";
    case SplitTag::test: return "test";
  }
  return "?";
}

inline SplitTag parse_split_tag(std::string_view s) {
  if (s == "train") return SplitTag::train;
  if (s == "val") return SplitTag::val;
  if (s == "test") return SplitTag::test;
  throw FormatError("unknown split tag '" + std::string(s) + "'");
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

struct SplitAssignment {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::string stratify_task;         // empty: one stratum
  std::vector<std::string> ids;      // row order of the source set
  std::vector<SplitTag> tags;        // aligned with ids
  std::vector<std::string> warnings;

  std::array<std::size_t, 3> sizes() const noexcept {
    std::array<std::size_t, 3> n{};
    for (auto t : tags) ++n[static_cast<std::size_t>(t)];
    return n;
  }

  std::vector<std::size_t> rows(SplitTag tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tags.size(); ++i)
      if (tags[i] == tag) out.push_back(i);
    return out;
  }

  friend bool operator==(const SplitAssignment& a, const SplitAssignment& b) {
    return a.seed == b.seed && a.ratios == b.ratios && a.stratify_task == b.stratify_task &&
           a.ids == b.ids && a.tags == b.tags;
  }
};

/// Per-class bucket sizes: val and test are floored, train takes the rest.
/// A class smaller than the number of non-zero buckets goes entirely to train.
inline std::array<std::size_t, 3> stratum_sizes(std::size_t n, const SplitRatios& r) {
  const std::size_t nonzero = (r.train > 0) + (r.val > 0) + (r.test > 0);
  if (n < nonzero) return {n, 0, 0};
  // The 1e-9 nudge keeps products like 0.29 * 100 = 28.999999999999996 on the
  // integer they denote.
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r.test + 1e-9));
  return {n - n_val - n_test, n_val, n_test};
}

/// Stratified seeded split.
///
/// Strata are the distinct values of `stratify_task` (every row in one
/// stratum when it is empty), visited in ascending byte order of the label.
/// One Xoshiro256 generator seeded with `seed` is shared across strata; each
/// stratum's rows, listed in set order, are shuffled with it and then dealt
/// as val, test, train.
inline SplitAssignment split_dataset(const EmbeddingSet& set, const SplitRatios& ratios,
                                     std::uint64_t seed, const std::string& stratify_task = {}) {
  for (double r : {ratios.train, ratios.val, ratios.test})
    if (!(r >= 0.0)) throw ArgumentError("split ratios must be non-negative");
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ArgumentError("split ratios must sum to 1");
  if (set.count() < 3) throw ArgumentError("split needs at least 3 rows");

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < set.count(); ++i) {
    std::string key;
    if (!stratify_task.empty()) key = set.label(i, stratify_task);
    strata[key].push_back(i);
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  out.stratify_task = stratify_task;
  out.tags.assign(set.count(), SplitTag::train);
  out.ids.reserve(set.count());
  for (const auto& m : set.meta()) out.ids.push_back(m.id);

  const std::size_t nonzero = (ratios.train > 0) + (ratios.val > 0) + (ratios.test > 0);
  Xoshiro256 rng(seed);
  for (auto& [label, rows] : strata) {
    if (rows.size() < nonzero) {
      out.warnings.push_back("class '" + label + "' has " + std::to_string(rows.size()) +
                             " rows; assigned entirely to train");
    }
    shuffle(std::span<std::size_t>(rows), rng);
    const auto sizes = stratum_sizes(rows.size(), ratios);
    const std::size_t n_val = sizes[1];
    const std::size_t n_test = sizes[2];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      SplitTag tag = SplitTag::train;
      if (k < n_val) tag = SplitTag::val;
      else if (k < n_val + n_test) tag = SplitTag::test;
      out.tags[rows[k]] = tag;
    }
  }
  return out;
}

inline nlohmann::json to_json(const SplitAssignment& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < a.ids.size(); ++i)
    rows.push_back({a.ids[i], std::string(to_string(a.tags[i]))});
  return {{"seed", a.seed},
          {"ratios", {a.ratios.train, a.ratios.val, a.ratios.test}},
          {"stratify", a.stratify_task},
          {"assignment", rows},
          {"warnings", a.warnings}};
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
  try {
    SplitAssignment a;
    a.seed = j.at("seed").get<std::uint64_t>();
    auto r = j.at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw FormatError("split ratios must have 3 entries");
    a.ratios = {r[0], r[1], r[2]};
    a.stratify_task = j.value("stratify", "");
    for (const auto& row : j.at("assignment")) {
      a.ids.push_back(row.at(0).get<std::string>());
      a.tags.push_back(parse_split_tag(row.at(1).get<std::string>()));
    }
    a.warnings = j.value("warnings", std::vector<std::string>{});
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed split assignment: ") + e.what());
  }
}

} // namespace artlens

#endif // ARTLENS_STORE_HPP
