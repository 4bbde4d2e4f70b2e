#include <omp.h>

#include "cpsp/kernels.hpp"
#include "kernels_detail.hpp"

namespace cpsp::kernels {

namespace {
int g_threads = 1;
}

void set_threads(int n) {
  g_threads = n < 1 ? 1 : n;
  omp_set_num_threads(g_threads);
}

int threads() { return g_threads; }

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  const std::size_t blocks = m / 4;
  if (k <= detail::kChunkThreshold) {
#pragma omp parallel for schedule(static) if (g_threads > 1)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks); ++bi) {
      const std::size_t i = static_cast<std::size_t>(bi) * 4;
      detail::gemm_rows4(n, k, a + i * k, k, b, c + i * n, n);
    }
    for (std::size_t i = blocks * 4; i < m; ++i)
      detail::gemm_row1(n, k, a + i * k, b, c + i * n);
    return;
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t t0 = 0; t0 < k; t0 += detail::kChunkK) {
    const std::size_t len = std::min(detail::kChunkK, k - t0);
    const double* bc = b + t0 * n;
#pragma omp parallel for schedule(static) if (g_threads > 1)
    for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(blocks); ++bi) {
      const std::size_t i = static_cast<std::size_t>(bi) * 4;
      detail::gemm_rows4_acc(n, len, a + i * k + t0, k, bc, c + i * n, n);
    }
    for (std::size_t i = blocks * 4; i < m; ++i)
      detail::gemm_row1_acc(n, len, a + i * k + t0, k, bc, c + i * n);
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  const std::vector<double> bt = detail::transpose(n, k, b);
  gemm_nn(m, n, k, a, bt.data(), c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  // A arrives (k, m); one transpose pass beats the strided accumulation
  const std::vector<double> at = detail::transpose(k, m, a);
  gemm_nn(m, n, k, at.data(), b, c);
}

void colsum(std::size_t m, std::size_t n, const double* a, double* out) {
  // per-column sums accumulate in ascending row order, matching the serial
  // reference exactly
#pragma omp parallel for schedule(static) if (g_threads > 1)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a[i * n + j];
    out[j] = s;
  }
}

}  // namespace cpsp::kernels
