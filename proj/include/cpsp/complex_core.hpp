#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace cpsp {

using cxd = std::complex<double>;

// Complex column vector.
struct CVec {
  std::vector<cxd> e;

  CVec() = default;
  explicit CVec(std::size_t n) : e(n) {}
  CVec(std::initializer_list<cxd> init) : e(init) {}

  std::size_t dim() const { return e.size(); }
  cxd& operator[](std::size_t i) { return e[i]; }
  const cxd& operator[](std::size_t i) const { return e[i]; }

  double norm2() const;  // squared Euclidean norm
  double norm() const;
};

// a^H b
cxd inner(const CVec& a, const CVec& b);

// Complex matrix stored as a list of equal-dimension columns (rows x cols).
struct CMat {
  std::size_t rows = 0;
  std::vector<CVec> col;

  CMat() = default;
  CMat(std::size_t n, std::size_t k) : rows(n), col(k, CVec(n)) {}

  std::size_t cols() const { return col.size(); }
  double fro_norm2() const;  // Tr(M M^H)
  void check_shape(std::size_t n, std::size_t k, const char* what) const;
};

// System dimensions and operating point shared by every operation.
struct SystemConfig {
  std::size_t n_antennas = 4;           // N
  std::size_t n_users = 4;              // K
  double noise_variance = 1.0;          // sigma^2
  double power_budget = 1.0;            // P
  std::vector<double> priorities;       // alpha_k; empty means all ones

  void validate() const;
  double priority(std::size_t k) const {
    return priorities.empty() ? 1.0 : priorities[k];
  }
  SystemConfig with_power(double p) const {
    SystemConfig c = *this;
    c.power_budget = p;
    return c;
  }
  static double power_for_snr_db(double noise_variance, double snr_db) {
    return noise_variance * std::pow(10.0, snr_db / 10.0);
  }
};

// N x K matrix of i.i.d. CN(0,1) entries (real/imaginary parts are
// independent zero-mean Gaussians with variance 1/2). Deterministic in seed;
// entries are drawn column by column, two engine draws per entry.
CMat gen_rayleigh_channel(const SystemConfig& cfg, std::uint64_t seed);

// |h_k^H w_k|^2 / (sum_{j!=k} |h_k^H w_j|^2 + sigma^2), user index 0-based.
double sinr(const SystemConfig& cfg, const CMat& H, const CMat& W, std::size_t k);

// sum_k log2(1 + SINR_k)
double sum_rate(const SystemConfig& cfg, const CMat& H, const CMat& W);

// sum_k alpha_k log2(1 + SINR_k)
double weighted_sum_rate(const SystemConfig& cfg, const CMat& H, const CMat& W);

}  // namespace cpsp
