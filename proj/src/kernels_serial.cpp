#include "cpsp/kernels.hpp"
#include "kernels_detail.hpp"

namespace cpsp::kernels::serial {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  if (k <= detail::kChunkThreshold) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4)
      detail::gemm_rows4(n, k, a + i * k, k, b, c + i * n, n);
    for (; i < m; ++i) detail::gemm_row1(n, k, a + i * k, b, c + i * n);
    return;
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  for (std::size_t t0 = 0; t0 < k; t0 += detail::kChunkK) {
    const std::size_t len = std::min(detail::kChunkK, k - t0);
    const double* bc = b + t0 * n;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4)
      detail::gemm_rows4_acc(n, len, a + i * k + t0, k, bc, c + i * n, n);
    for (; i < m; ++i)
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
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
}

}  // namespace cpsp::kernels::serial
