#ifndef ARTLENS_SIMCORE_HPP
#define ARTLENS_SIMCORE_HPP

// Similarity kernels shared by zero-shot, k-NN and retrieval.
//
// Every similarity in the toolkit is computed by one formula,
//
//   score(q, r) = dot(q, r) / (norm(q) * norm(r))
//
// with dot products accumulated in double over float32 storage. top_k and
// cosine share it exactly, so a top-1 hit and an explicit cosine argmax agree
// bit for bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace artlens {

struct ScoredHit {
  std::size_t row_index = 0;
  double score = 0.0;

  friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

/// Total order used for ranking: higher score first, then lower row index.
inline bool ranks_before(const ScoredHit& a, const ScoredHit& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.row_index < b.row_index;
}

template <typename A, typename B>
double dot(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size())
    throw DimensionError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

template <typename T>
double l2_norm(std::span<const T> v) {
  return std::sqrt(dot(v, v));
}

/// Unit vector parallel to v. Computed in double, rounded to float per entry.
template <typename T>
std::vector<T> l2_normalize(std::span<const T> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) throw ArgumentError("cannot normalize a zero-norm vector");
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<T>(static_cast<double>(v[i]) / n);
  return out;
}

template <typename T>
std::vector<T> l2_normalize(const std::vector<T>& v) {
  return l2_normalize(std::span<const T>(v));
}

template <typename A, typename B>
double cosine(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: dimension mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw ArgumentError("cosine of a zero-norm vector");
  return dot(a, b) / (na * nb);
}

template <typename A, typename B>
double cosine(const std::vector<A>& a, const std::vector<B>& b) {
  return cosine(std::span<const A>(a), std::span<const B>(b));
}

/// Row norms of a matrix, in the form top_k consumes them.
template <typename T>
std::vector<double> row_norms(const Matrix<T>& m) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = l2_norm(m.row(r));
  return out;
}

/// Row-wise L2 normalization.
template <typename T>
Matrix<T> normalize_rows(const Matrix<T>& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto unit = l2_normalize(m.row(r));
    std::copy(unit.begin(), unit.end(), out.row(r).begin());
  }
  return out;
}

struct ScanOptions {
  /// Worker threads; 0 picks hardware concurrency, 1 forces a serial scan.
  unsigned threads = 0;
  /// Scans smaller than this many multiply-adds run serially.
  std::size_t parallel_threshold = std::size_t{1} << 22;
};

namespace detail {

template <typename Q, typename T>
void scan_block(std::span<const Q> query, double query_norm, const Matrix<T>& matrix,
                std::span<const double> norms, std::size_t begin, std::size_t end,
                std::size_t k, std::vector<ScoredHit>& out) {
  out.clear();
  out.reserve(end - begin);
  for (std::size_t r = begin; r < end; ++r)
    out.push_back({r, dot(query, matrix.row(r)) / (query_norm * norms[r])});
  const std::size_t keep = std::min(k, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(),
                    ranks_before);
  out.resize(keep);
}

} // namespace detail

/// Exact top-k by cosine against every row of `matrix`, using precomputed row
/// norms. Results are ordered by ranks_before; the parallel path partitions
/// rows into contiguous blocks and merges under the same total order, so it
/// returns exactly what the serial scan returns.
template <typename Q, typename T>
std::vector<ScoredHit> top_k(std::span<const Q> query, const Matrix<T>& matrix,
                             std::span<const double> norms, std::size_t k,
                             const ScanOptions& options = {}) {
  if (k == 0) throw ArgumentError("top_k: k must be positive");
  if (matrix.rows() == 0) throw ArgumentError("top_k: empty matrix");
  if (query.size() != matrix.cols())
    throw DimensionError("top_k: query dim " + std::to_string(query.size()) + " vs matrix dim " +
                         std::to_string(matrix.cols()));
  if (norms.size() != matrix.rows()) throw DimensionError("top_k: norms/rows mismatch");
  const double qn = l2_norm(query);
  if (!(qn > 0.0)) throw ArgumentError("top_k: zero-norm query");

  const std::size_t n = matrix.rows();
  unsigned workers = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.threads;
  if (n * matrix.cols() < options.parallel_threshold) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

  std::vector<ScoredHit> hits;
  if (workers <= 1) {
    detail::scan_block(query, qn, matrix, norms, 0, n, k, hits);
    return hits;
  }

  std::vector<std::vector<ScoredHit>> partial(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(n, w * chunk);
      const std::size_t end = std::min(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] {
        detail::scan_block(query, qn, matrix, norms, begin, end, k, partial[w]);
      });
    }
  }
  for (auto& p : partial) hits.insert(hits.end(), p.begin(), p.end());
  const std::size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    ranks_before);
  hits.resize(keep);
  return hits;
}

/// Convenience overload that computes row norms on the fly.
template <typename Q, typename T>
std::vector<ScoredHit> top_k(std::span<const Q> query, const Matrix<T>& matrix, std::size_t k,
                             const ScanOptions& options = {}) {
  if (k == 0) throw ArgumentError("top_k: k must be positive");
  if (matrix.rows() == 0) throw ArgumentError("top_k: empty matrix");
  const auto norms = row_norms(matrix);
  for (double nr : norms)
    if (!(nr > 0.0)) throw ArgumentError("top_k: matrix has a zero-norm row");
  return top_k(query, matrix, std::span<const double>(norms), k, options);
}

template <typename Q, typename T>
std::vector<ScoredHit> top_k(const std::vector<Q>& query, const Matrix<T>& matrix, std::size_t k,
                             const ScanOptions& options = {}) {
  return top_k(std::span<const Q>(query), matrix, k, options);
}

} // namespace artlens

#endif // ARTLENS_SIMCORE_HPP
