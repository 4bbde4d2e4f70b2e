#pragma once

#include <cstddef>
#include <vector>

// Row-level building blocks shared by the serial and OpenMP kernel drivers.
// Both drivers must produce bitwise-identical output, so all floating-point
// accumulation order lives here and nowhere else: every output element is
// accumulated over the k index in ascending order, whichever driver runs it.

namespace cpsp::kernels::detail {

// C(rows 0..3, :) = A(rows 0..3, :) * B with a 4x8 register tile.
inline void gemm_rows4(std::size_t n, std::size_t k, const double* __restrict a,
                       std::size_t lda, const double* __restrict b,
                       double* __restrict c, std::size_t ldc) {
  const double* ar0 = a;
  const double* ar1 = a + lda;
  const double* ar2 = a + 2 * lda;
  const double* ar3 = a + 3 * lda;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    double a0[8] = {}, a1[8] = {}, a2[8] = {}, a3[8] = {};
    for (std::size_t t = 0; t < k; ++t) {
      const double* __restrict br = b + t * n + j;
      const double x0 = ar0[t], x1 = ar1[t], x2 = ar2[t], x3 = ar3[t];
#pragma omp simd
      for (int u = 0; u < 8; ++u) {
        a0[u] += x0 * br[u];
        a1[u] += x1 * br[u];
        a2[u] += x2 * br[u];
        a3[u] += x3 * br[u];
      }
    }
    for (int u = 0; u < 8; ++u) {
      c[0 * ldc + j + u] = a0[u];
      c[1 * ldc + j + u] = a1[u];
      c[2 * ldc + j + u] = a2[u];
      c[3 * ldc + j + u] = a3[u];
    }
  }
  for (; j < n; ++j) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double bv = b[t * n + j];
      s0 += ar0[t] * bv;
      s1 += ar1[t] * bv;
      s2 += ar2[t] * bv;
      s3 += ar3[t] * bv;
    }
    c[0 * ldc + j] = s0;
    c[1 * ldc + j] = s1;
    c[2 * ldc + j] = s2;
    c[3 * ldc + j] = s3;
  }
}

inline void gemm_row1(std::size_t n, std::size_t k, const double* __restrict a,
                      const double* __restrict b, double* __restrict c) {
  for (std::size_t j = 0; j < n; ++j) c[j] = 0.0;
  for (std::size_t t = 0; t < k; ++t) {
    const double x = a[t];
    const double* __restrict br = b + t * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) c[j] += x * br[j];
  }
}

// Accumulating variants for the k-chunked path: C += A(rows 0..3, :) * B.
inline void gemm_rows4_acc(std::size_t n, std::size_t k, const double* __restrict a,
                           std::size_t lda, const double* __restrict b,
                           double* __restrict c, std::size_t ldc) {
  const double* ar0 = a;
  const double* ar1 = a + lda;
  const double* ar2 = a + 2 * lda;
  const double* ar3 = a + 3 * lda;
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    double a0[8] = {}, a1[8] = {}, a2[8] = {}, a3[8] = {};
    for (std::size_t t = 0; t < k; ++t) {
      const double* __restrict br = b + t * n + j;
      const double x0 = ar0[t], x1 = ar1[t], x2 = ar2[t], x3 = ar3[t];
#pragma omp simd
      for (int u = 0; u < 8; ++u) {
        a0[u] += x0 * br[u];
        a1[u] += x1 * br[u];
        a2[u] += x2 * br[u];
        a3[u] += x3 * br[u];
      }
    }
    for (int u = 0; u < 8; ++u) {
      c[0 * ldc + j + u] += a0[u];
      c[1 * ldc + j + u] += a1[u];
      c[2 * ldc + j + u] += a2[u];
      c[3 * ldc + j + u] += a3[u];
    }
  }
  for (; j < n; ++j) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double bv = b[t * n + j];
      s0 += ar0[t] * bv;
      s1 += ar1[t] * bv;
      s2 += ar2[t] * bv;
      s3 += ar3[t] * bv;
    }
    c[0 * ldc + j] += s0;
    c[1 * ldc + j] += s1;
    c[2 * ldc + j] += s2;
    c[3 * ldc + j] += s3;
  }
}

inline void gemm_row1_acc(std::size_t n, std::size_t k, const double* __restrict a,
                          std::size_t lda_unused, const double* __restrict b,
                          double* __restrict c) {
  (void)lda_unused;
  for (std::size_t t = 0; t < k; ++t) {
    const double x = a[t];
    const double* __restrict br = b + t * n;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) c[j] += x * br[j];
  }
}

// Above this depth the inner-dimension chunked path keeps the B slice in
// cache; chunk boundaries depend only on the shape, so serial and parallel
// drivers accumulate every element in the same order.
constexpr std::size_t kChunkK = 256;
constexpr std::size_t kChunkThreshold = 320;

inline std::vector<double> transpose(std::size_t rows, std::size_t cols, const double* a) {
  std::vector<double> t(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
  return t;
}

}  // namespace cpsp::kernels::detail
