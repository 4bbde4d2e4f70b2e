#include "cpsp/complex_core.hpp"

#include <cmath>
#include <stdexcept>

#include "cpsp/rng.hpp"

namespace cpsp {

double CVec::norm2() const {
  double s = 0.0;
  for (const cxd& x : e) s += x.real() * x.real() + x.imag() * x.imag();
  return s;
}

double CVec::norm() const { return std::sqrt(norm2()); }

cxd inner(const CVec& a, const CVec& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
  cxd s{0.0, 0.0};
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.e[i]) * b.e[i];
  return s;
}

double CMat::fro_norm2() const {
  double s = 0.0;
  for (const CVec& c : col) s += c.norm2();
  return s;
}

void CMat::check_shape(std::size_t n, std::size_t k, const char* what) const {
  if (rows != n || cols() != k)
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
  for (const CVec& c : col)
    if (c.dim() != rows)
      throw std::invalid_argument(std::string(what) + ": ragged columns");
}

void SystemConfig::validate() const {
  if (n_antennas < 1) throw std::invalid_argument("config: n_antennas must be >= 1");
  if (n_users < 1) throw std::invalid_argument("config: n_users must be >= 1");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("config: noise_variance must be > 0");
  if (!(power_budget > 0.0)) throw std::invalid_argument("config: power_budget must be > 0");
  if (!priorities.empty()) {
    if (priorities.size() != n_users)
      throw std::invalid_argument("config: priorities size must equal n_users");
    for (double a : priorities)
      if (!(a > 0.0)) throw std::invalid_argument("config: priorities must be > 0");
  }
}

CMat gen_rayleigh_channel(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  CMat h(cfg.n_antennas, cfg.n_users);
  for (std::size_t k = 0; k < cfg.n_users; ++k)
    for (std::size_t i = 0; i < cfg.n_antennas; ++i) h.col[k][i] = rng.cnormal();
  return h;
}

double sinr(const SystemConfig& cfg, const CMat& H, const CMat& W, std::size_t k) {
  H.check_shape(cfg.n_antennas, cfg.n_users, "sinr: H");
  W.check_shape(cfg.n_antennas, cfg.n_users, "sinr: W");
  if (k >= cfg.n_users) throw std::invalid_argument("sinr: user index out of range");
  double signal = 0.0;
  double interference = 0.0;
  for (std::size_t j = 0; j < cfg.n_users; ++j) {
    const cxd g = inner(H.col[k], W.col[j]);
    const double p = g.real() * g.real() + g.imag() * g.imag();
    if (j == k)
      signal = p;
    else
      interference += p;
  }
  return signal / (interference + cfg.noise_variance);
}

double sum_rate(const SystemConfig& cfg, const CMat& H, const CMat& W) {
  double r = 0.0;
  for (std::size_t k = 0; k < cfg.n_users; ++k) r += std::log2(1.0 + sinr(cfg, H, W, k));
  return r;
}

double weighted_sum_rate(const SystemConfig& cfg, const CMat& H, const CMat& W) {
  double r = 0.0;
  for (std::size_t k = 0; k < cfg.n_users; ++k)
    r += cfg.priority(k) * std::log2(1.0 + sinr(cfg, H, W, k));
  return r;
}

}  // namespace cpsp
