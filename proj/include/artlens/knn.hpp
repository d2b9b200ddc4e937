#ifndef ARTLENS_KNN_HPP
#define ARTLENS_KNN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "simcore.hpp"
#include "store.hpp"

namespace artlens {

/// Labeled reference embeddings for one task, rows unit-normalized at build.
class ReferenceIndex {
public:
  ReferenceIndex(Matrix<float> normalized, std::vector<std::uint32_t> labels, LabelSpace labelspace)
      : matrix_(std::move(normalized)),
        norms_(row_norms(matrix_)),
        labels_(std::move(labels)),
        labelspace_(std::move(labelspace)) {
    if (labels_.size() != matrix_.rows()) throw DimensionError("reference labels/rows mismatch");
    for (auto l : labels_)
      if (l >= labelspace_.size()) throw InvariantError("reference label index out of range");
  }

  const Matrix<float>& matrix() const noexcept { return matrix_; }
  std::span<const double> norms() const noexcept { return norms_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  const LabelSpace& labelspace() const noexcept { return labelspace_; }
  std::size_t size() const noexcept { return matrix_.rows(); }
  std::size_t dim() const noexcept { return matrix_.cols(); }

private:
  Matrix<float> matrix_;
  std::vector<double> norms_;
  std::vector<std::uint32_t> labels_;
  LabelSpace labelspace_;
};

inline ReferenceIndex build_reference(const EmbeddingSet& set, const std::string& task,
                                      const LabelSpace& labelspace) {
  std::vector<std::uint32_t> labels;
  labels.reserve(set.count());
  for (std::size_t i = 0; i < set.count(); ++i)
    labels.push_back(static_cast<std::uint32_t>(labelspace.index_of(set.label(i, task))));
  return ReferenceIndex(normalize_rows(set.vectors()), std::move(labels), labelspace);
}

struct KnnVote {
  std::size_t label = 0;
  /// k = 1: cosine of the nearest reference; k > 1: summed cosine of the
  /// winning class among the top-k hits.
  double score = 0.0;
};

/// k = 1 returns the label of the most similar reference row. For k > 1 the
/// top-k hits vote with weight equal to their cosine score; the heaviest
/// class wins, ties to the lowest class index.
template <typename T>
KnnVote vote_knn(std::span<const T> query, const ReferenceIndex& ref, std::size_t k,
                 const ScanOptions& options = {}) {
  if (k == 0) throw ArgumentError("knn: k must be positive");
  if (ref.size() == 0) throw ArgumentError("knn: empty reference set");
  const auto hits = top_k(query, ref.matrix(), ref.norms(), k, options);
  if (k == 1) return {ref.labels()[hits.front().row_index], hits.front().score};

  std::vector<double> weight(ref.labelspace().size(), 0.0);
  for (const auto& h : hits) weight[ref.labels()[h.row_index]] += h.score;
  std::vector<bool> present(weight.size(), false);
  for (const auto& h : hits) present[ref.labels()[h.row_index]] = true;

  KnnVote best{weight.size(), 0.0};
  for (std::size_t c = 0; c < weight.size(); ++c) {
    if (!present[c]) continue;
    if (best.label == weight.size() || weight[c] > best.score) best = {c, weight[c]};
  }
  return best;
}

template <typename T>
std::size_t classify_knn(std::span<const T> query, const ReferenceIndex& ref, std::size_t k = 1,
                         const ScanOptions& options = {}) {
  return vote_knn(query, ref, k, options).label;
}

template <typename T>
std::size_t classify_knn(const std::vector<T>& query, const ReferenceIndex& ref, std::size_t k = 1,
                         const ScanOptions& options = {}) {
  return classify_knn(std::span<const T>(query), ref, k, options);
}

} // namespace artlens

#endif // ARTLENS_KNN_HPP
