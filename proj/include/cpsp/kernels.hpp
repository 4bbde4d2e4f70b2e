#pragma once

#include <cstddef>
#include <vector>

namespace cpsp {

// Dense row-major real matrix used for feature/label batches and layer
// parameters.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RowMatrix() = default;
  RowMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

namespace kernels {

// Worker count for the parallel kernels (and everything batch-parallel built
// on them). 1 disables OpenMP dispatch.
void set_threads(int n);
int threads();

// C(m,n) = A(m,k) * B(k,n)
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
// C(m,n) = A(m,k) * B(n,k)^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
// C(m,n) = A(k,m)^T * B(k,n)
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
// out(n) = column sums of A(m,n)
void colsum(std::size_t m, std::size_t n, const double* a, double* out);

// Serial reference implementations. The parallel kernels partition work over
// independent output rows and share the same inner routines, so results are
// required to match these bitwise; the test suite enforces that.
namespace serial {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c);
void colsum(std::size_t m, std::size_t n, const double* a, double* out);
}  // namespace serial

}  // namespace kernels
}  // namespace cpsp
