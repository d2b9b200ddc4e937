#ifndef ARTLENS_RETRIEVAL_HPP
#define ARTLENS_RETRIEVAL_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "simcore.hpp"
#include "store.hpp"

namespace artlens {

/// Exact flat cosine index over a whole embedding set.
class RetrievalIndex {
public:
  explicit RetrievalIndex(const EmbeddingSet& set)
      : matrix_(set.count() == 0 ? throw ArgumentError("cannot index an empty set")
                                 : normalize_rows(set.vectors())),
        norms_(row_norms(matrix_)),
        meta_(set.meta()) {}

  const Matrix<float>& matrix() const noexcept { return matrix_; }
  std::span<const double> norms() const noexcept { return norms_; }
  const std::vector<RowMeta>& meta() const noexcept { return meta_; }
  std::size_t size() const noexcept { return matrix_.rows(); }
  std::size_t dim() const noexcept { return matrix_.cols(); }

private:
  Matrix<float> matrix_;
  std::vector<double> norms_;
  std::vector<RowMeta> meta_;
};

inline RetrievalIndex build_index(const EmbeddingSet& set) { return RetrievalIndex(set); }

struct RetrievalHit {
  std::size_t row_index = 0;
  std::string id;
  std::map<std::string, std::string> labels;
  double score = 0.0;

  std::string label(const std::string& task) const {
    auto it = labels.find(task);
    return it == labels.end() ? std::string{} : it->second;
  }
};

struct RetrieveOptions {
  bool exclude_self = false;
  /// Id of the query when it is itself indexed; only used with exclude_self.
  std::optional<std::string> query_id;
  ScanOptions scan;
};

/// Top-K rows by cosine, decorated with row metadata. With exclude_self, a
/// leading hit that carries the query's own id and scores >= 1 - 1e-6 is
/// dropped and the next hit takes its place.
template <typename T>
std::vector<RetrievalHit> retrieve(const RetrievalIndex& index, std::span<const T> query,
                                   std::size_t k, const RetrieveOptions& options = {}) {
  if (k == 0) throw ArgumentError("retrieve: K must be positive");
  const bool may_drop = options.exclude_self && options.query_id.has_value();
  auto hits = top_k(query, index.matrix(), index.norms(), may_drop ? k + 1 : k, options.scan);
  if (may_drop && !hits.empty() && hits.front().score >= 1.0 - 1e-6 &&
      index.meta()[hits.front().row_index].id == *options.query_id) {
    hits.erase(hits.begin());
  }
  if (hits.size() > k) hits.resize(k);

  std::vector<RetrievalHit> out;
  out.reserve(hits.size());
  for (const auto& h : hits) {
    const auto& m = index.meta()[h.row_index];
    out.push_back({h.row_index, m.id, m.labels, h.score});
  }
  return out;
}

template <typename T>
std::vector<RetrievalHit> retrieve(const RetrievalIndex& index, const std::vector<T>& query,
                                   std::size_t k, const RetrieveOptions& options = {}) {
  return retrieve(index, std::span<const T>(query), k, options);
}

} // namespace artlens

#endif // ARTLENS_RETRIEVAL_HPP
