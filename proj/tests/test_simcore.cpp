#include <gtest/gtest.h>

#include <cmath>

#include <artlens/simcore.hpp>

#include "oracles.hpp"

using namespace artlens;

TEST(Simcore, NormalizeThreeFourFive) {
  const auto u = l2_normalize(std::vector<float>{3, 4});
  EXPECT_NEAR(u[0], 0.6f, 1e-7);
  EXPECT_NEAR(u[1], 0.8f, 1e-7);
}

TEST(Simcore, NormalizeIsIdempotentOnUnitVectors) {
  Xoshiro256 rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto u = l2_normalize(oracle::random_vec(rng, 32));
    EXPECT_NEAR(l2_norm(std::span<const float>(u)), 1.0, 1e-6);
    const auto uu = l2_normalize(u);
    for (std::size_t j = 0; j < u.size(); ++j) EXPECT_NEAR(uu[j], u[j], 1e-7);
  }
}

TEST(Simcore, NormalizeZeroThrows) {
  EXPECT_THROW(l2_normalize(std::vector<float>{0, 0}), ArgumentError);
}

TEST(Simcore, CosineKnownValues) {
  const std::vector<float> a{1, 2, 3};
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine(std::vector<float>{1, 0}, std::vector<float>{0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(cosine(std::vector<float>{2}, std::vector<float>{-2}), -1.0, 1e-12);
  EXPECT_THROW(cosine(std::vector<float>{0, 0}, std::vector<float>{1, 0}), ArgumentError);
  EXPECT_THROW(cosine(std::vector<float>{1, 0}, std::vector<float>{1, 0, 0}), DimensionError);
}

TEST(Simcore, CosineMatchesScalarOracle) {
  Xoshiro256 rng(20);
  for (int i = 0; i < 20; ++i) {
    const auto a = oracle::random_vec(rng, 16);
    const auto b = oracle::random_vec(rng, 16);
    const double c = cosine(a, b);
    EXPECT_NEAR(c, oracle::cosine(a, b), 1e-6);
    EXPECT_NEAR(c, cosine(b, a), 1e-12);
    std::vector<float> scaled(a);
    for (auto& x : scaled) x *= 3.5f;
    EXPECT_NEAR(cosine(scaled, b), c, 1e-6);
    EXPECT_LE(std::abs(c), 1.0 + 1e-6);
  }
}

TEST(Simcore, TopKSelfHit) {
  Xoshiro256 rng(1);
  const auto m = normalize_rows(oracle::to_matrix(oracle::random_rows(rng, 30, 8)));
  const auto q = m.row(7);
  const auto hits = top_k(q, m, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].row_index, 7u);
  EXPECT_NEAR(hits[0].score, 1.0, 1e-6);
}

TEST(Simcore, TopKClampsAndRejects) {
  Xoshiro256 rng(2);
  const auto rows = oracle::random_rows(rng, 4, 3);
  const auto m = oracle::to_matrix(rows);
  EXPECT_EQ(top_k(rows[0], m, 10).size(), 4u);
  EXPECT_THROW(top_k(rows[0], m, 0), ArgumentError);
  EXPECT_THROW(top_k(rows[0], Matrix<float>(0, 3), 1), ArgumentError);
  EXPECT_THROW(top_k(std::vector<float>{0, 0, 0}, m, 1), ArgumentError);
  EXPECT_THROW(top_k(std::vector<float>{1, 0}, m, 1), DimensionError);
}

TEST(Simcore, TopKTiesBreakByRowIndex) {
  Matrix<float> m;
  for (int i = 0; i < 5; ++i) m.push_row(std::vector<float>{1, 0});
  const auto hits = top_k(std::vector<float>{2, 0}, m, 5);
  for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i].row_index, i);
}

TEST(Simcore, TopKEqualsExhaustiveOracle) {
  Xoshiro256 rng(200);
  const auto rows = oracle::random_rows(rng, 200, 16);
  const auto m = oracle::to_matrix(rows);
  for (int q = 0; q < 20; ++q) {
    const auto query = oracle::random_vec(rng, 16);
    for (std::size_t k : {1u, 5u, 10u}) {
      const auto got = top_k(query, m, k);
      const auto want = oracle::exhaustive_top_k(query, rows, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].row_index, want[i].row);
        EXPECT_EQ(got[i].score, want[i].score);
      }
    }
  }
}

TEST(Simcore, ArgmaxInvariantToQueryScale) {
  Xoshiro256 rng(3);
  const auto m = oracle::to_matrix(oracle::random_rows(rng, 100, 16));
  for (int t = 0; t < 20; ++t) {
    const auto q = oracle::random_vec(rng, 16);
    auto scaled = q;
    for (auto& x : scaled) x *= 4.0f;
    const auto a = top_k(q, m, 5);
    const auto b = top_k(scaled, m, 5);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].row_index, b[i].row_index);
  }
}

TEST(Simcore, PrefixProperty) {
  Xoshiro256 rng(4);
  const auto m = oracle::to_matrix(oracle::random_rows(rng, 60, 8));
  const auto q = oracle::random_vec(rng, 8);
  for (std::size_t k = 1; k < 60; ++k) {
    const auto a = top_k(q, m, k);
    const auto b = top_k(q, m, k + 1);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  }
}

TEST(Simcore, ParallelScanMatchesSerial) {
  Xoshiro256 rng(5);
  auto rows = oracle::random_rows(rng, 997, 16);
  // Duplicate rows to force exact score ties across block boundaries.
  for (int i = 0; i < 40; ++i) rows[500 + i] = rows[10];
  const auto m = oracle::to_matrix(rows);
  for (unsigned threads : {2u, 3u, 7u, 16u}) {
    ScanOptions par{.threads = threads, .parallel_threshold = 0};
    ScanOptions ser{.threads = 1};
    for (int t = 0; t < 5; ++t) {
      const auto q = t == 0 ? rows[10] : oracle::random_vec(rng, 16);
      EXPECT_EQ(top_k(q, m, 50, par), top_k(q, m, 50, ser));
    }
  }
}
