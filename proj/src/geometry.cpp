#include "cpsp/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace cpsp {

namespace {

inline double abs2(const cxd& x) { return x.real() * x.real() + x.imag() * x.imag(); }

}  // namespace

CpsProjection project_to_cps(const CVec& x) {
  const std::size_t n = x.dim();
  std::size_t ref = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].real() != 0.0 || x[i].imag() != 0.0) {
      ref = i;
      break;
    }
  }
  if (ref == n) throw std::domain_error("project_to_cps: zero vector");

  const double nrm = x.norm();
  const double ref_mag = std::sqrt(abs2(x[ref]));
  const cxd unit = std::conj(x[ref]) / ref_mag;  // e^{-j angle(x_ref)}

  CpsPoint p;
  p.v = CVec(n);
  for (std::size_t i = 0; i < n; ++i) p.v[i] = (x[i] * unit) / nrm;
  p.v[ref] = cxd(ref_mag / nrm, 0.0);  // exact zero imaginary part
  return {p, nrm};
}

HypersphericalCoords to_hyperspherical(const CpsPoint& p) {
  const std::size_t n = p.dim();
  HypersphericalCoords h;
  if (n < 2) return h;
  h.theta.resize(n - 1);
  h.phi.resize(n - 1);

  // suffix squared norms: suf[i] = sum_{t >= i} |v_t|^2
  std::vector<double> suf(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suf[i] = suf[i + 1] + abs2(p.v[i]);

  for (std::size_t m = 0; m < n - 1; ++m) {
    // atan2 with non-negative arguments lands in [0, pi/2]; the all-zero
    // corner gives atan2(0, 0) = 0, the documented convention.
    h.theta[m] = std::atan2(std::sqrt(suf[m + 1]), std::sqrt(abs2(p.v[m])));
    const cxd& u = p.v[m + 1];
    h.phi[m] = (u.real() == 0.0 && u.imag() == 0.0) ? 0.0 : std::atan2(u.imag(), u.real());
  }
  return h;
}

CpsPoint from_hyperspherical(const HypersphericalCoords& h) {
  if (h.theta.size() != h.phi.size())
    throw std::invalid_argument("from_hyperspherical: theta/phi size mismatch");
  const std::size_t n = h.theta.size() + 1;
  constexpr double kPi = 3.14159265358979323846;
  for (double t : h.theta)
    if (!(t >= 0.0 && t <= kPi / 2))
      throw std::domain_error("from_hyperspherical: theta outside [0, pi/2]");
  for (double f : h.phi)
    if (!(f >= -kPi && f <= kPi))
      throw std::domain_error("from_hyperspherical: phi outside [-pi, pi]");

  CpsPoint p;
  p.v = CVec(n);
  if (n == 1) {
    p.v[0] = 1.0;
    return p;
  }
  p.v[0] = cxd(std::cos(h.theta[0]), 0.0);
  double sin_prod = 1.0;
  for (std::size_t m = 1; m < n; ++m) {
    sin_prod *= std::sin(h.theta[m - 1]);
    const double mag = (m + 1 < n) ? std::cos(h.theta[m]) * sin_prod : sin_prod;
    p.v[m] = cxd(mag * std::cos(h.phi[m - 1]), mag * std::sin(h.phi[m - 1]));
  }
  return p;
}

std::size_t embed_dim(std::size_t n) { return 2 * n - 1; }

void embed_cps(const CpsPoint& p, std::span<double> out) {
  const std::size_t n = p.dim();
  if (out.size() != embed_dim(n)) throw std::invalid_argument("embed_cps: bad span size");
  for (std::size_t i = 0; i < n; ++i) out[i] = p.v[i].real();
  for (std::size_t i = 1; i < n; ++i) out[n + i - 1] = p.v[i].imag();
}

CpsPoint unembed_cps(std::span<const double> emb, std::size_t n) {
  if (emb.size() != embed_dim(n)) throw std::invalid_argument("unembed_cps: bad span size");
  CpsPoint p;
  p.v = CVec(n);
  p.v[0] = cxd(emb[0], 0.0);
  for (std::size_t i = 1; i < n; ++i) p.v[i] = cxd(emb[i], emb[n + i - 1]);
  return p;
}

}  // namespace cpsp
