#include "cpsp/wmmse.hpp"

#include <cmath>
#include <stdexcept>

#include "cpsp/rng.hpp"

namespace cpsp {

namespace {

inline double abs2(const cxd& x) { return x.real() * x.real() + x.imag() * x.imag(); }

// In-place Cholesky factorization A = L L^H of a Hermitian positive definite
// matrix stored row-major (lower triangle referenced). Returns false when a
// non-positive pivot is met.
bool cholesky(std::vector<cxd>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j].real();
    for (std::size_t t = 0; t < j; ++t) d -= abs2(a[j * n + t]);
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cxd s = a[i * n + j];
      for (std::size_t t = 0; t < j; ++t) s -= a[i * n + t] * std::conj(a[j * n + t]);
      a[i * n + j] = s / ljj;
    }
  }
  return true;
}

// Solve L L^H x = b with the factor from cholesky().
void cholesky_solve(const std::vector<cxd>& l, std::size_t n, const CVec& b, CVec& x) {
  CVec y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cxd s = b[i];
    for (std::size_t t = 0; t < i; ++t) s -= l[i * n + t] * y[t];
    y[i] = s / l[i * n + i].real();
  }
  for (std::size_t i = n; i-- > 0;) {
    cxd s = y[i];
    for (std::size_t t = i + 1; t < n; ++t) s -= std::conj(l[t * n + i]) * x[t];
    x[i] = s / l[i * n + i].real();
  }
}

struct RegularizedSolve {
  CMat W;
  double power = 0.0;
  bool singular = false;
};

// W(lambda): factor G + lambda I once, then one solve per user scaled by
// s_k = alpha_k c_k q_k^*.
RegularizedSolve solve_at_lambda(const std::vector<cxd>& g_lower, std::size_t n,
                                 const CMat& H, const std::vector<cxd>& scale,
                                 double lambda) {
  RegularizedSolve r;
  std::vector<cxd> l = g_lower;
  for (std::size_t i = 0; i < n; ++i) l[i * n + i] += lambda;
  if (!cholesky(l, n)) {
    r.singular = true;
    return r;
  }
  const std::size_t k_users = H.cols();
  r.W = CMat(n, k_users);
  CVec x(n);
  for (std::size_t k = 0; k < k_users; ++k) {
    if (scale[k] == cxd{0.0, 0.0}) continue;  // zero column already in place
    cholesky_solve(l, n, H.col[k], x);
    for (std::size_t i = 0; i < n; ++i) r.W.col[k][i] = scale[k] * x[i];
    r.power += r.W.col[k].norm2();
  }
  return r;
}

}  // namespace

void WmmseOptions::validate() const {
  if (max_iter < 1) throw std::invalid_argument("wmmse options: max_iter must be >= 1");
  if (!(convergence_tol >= 0.0))
    throw std::invalid_argument("wmmse options: convergence_tol must be >= 0");
  if (!(bisection_tol > 0.0))
    throw std::invalid_argument("wmmse options: bisection_tol must be > 0");
  if (bisection_max_steps < 1)
    throw std::invalid_argument("wmmse options: bisection_max_steps must be >= 1");
}

CMat init_precoders(const SystemConfig& cfg, const CMat& H, InitMode mode,
                    std::uint64_t seed) {
  cfg.validate();
  H.check_shape(cfg.n_antennas, cfg.n_users, "init_precoders: H");
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  CMat w(n, k_users);

  if (mode == InitMode::MrtFullPower) {
    const double per_user = std::sqrt(cfg.power_budget / static_cast<double>(k_users));
    for (std::size_t k = 0; k < k_users; ++k) {
      const double nrm = H.col[k].norm();
      if (nrm == 0.0) {
        // degenerate channel column: seeded random direction for this user
        Rng rng(derive_seed(seed, k));
        CVec d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = rng.cnormal();
        const double dn = d.norm();
        for (std::size_t i = 0; i < n; ++i) w.col[k][i] = per_user * d[i] / dn;
      } else {
        for (std::size_t i = 0; i < n; ++i) w.col[k][i] = per_user * H.col[k][i] / nrm;
      }
    }
    return w;
  }

  Rng rng(seed);
  for (std::size_t k = 0; k < k_users; ++k)
    for (std::size_t i = 0; i < n; ++i) w.col[k][i] = rng.cnormal();
  const double scale = std::sqrt(cfg.power_budget / w.fro_norm2());
  for (std::size_t k = 0; k < k_users; ++k)
    for (std::size_t i = 0; i < n; ++i) w.col[k][i] *= scale;
  return w;
}

std::vector<cxd> update_receive_filters(const SystemConfig& cfg, const CMat& H,
                                        const CMat& W) {
  H.check_shape(cfg.n_antennas, cfg.n_users, "update_receive_filters: H");
  W.check_shape(cfg.n_antennas, cfg.n_users, "update_receive_filters: W");
  const std::size_t k_users = cfg.n_users;
  std::vector<cxd> q(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    double denom = cfg.noise_variance;
    for (std::size_t j = 0; j < k_users; ++j) denom += abs2(inner(H.col[k], W.col[j]));
    q[k] = std::conj(inner(H.col[k], W.col[k])) / denom;  // w_k^H h_k over denom
  }
  return q;
}

WeightUpdate update_weights(const SystemConfig& cfg, const CMat& H, const CMat& W,
                            const std::vector<cxd>& q) {
  H.check_shape(cfg.n_antennas, cfg.n_users, "update_weights: H");
  W.check_shape(cfg.n_antennas, cfg.n_users, "update_weights: W");
  const std::size_t k_users = cfg.n_users;
  WeightUpdate u;
  u.mse.resize(k_users);
  u.weight.resize(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    double e = abs2(q[k]) * cfg.noise_variance;
    for (std::size_t j = 0; j < k_users; ++j) {
      cxd t = q[k] * inner(H.col[k], W.col[j]);
      if (j == k) t -= 1.0;
      e += abs2(t);
    }
    if (!(e > 0.0)) throw std::runtime_error("update_weights: non-positive MSE");
    u.mse[k] = e;
    u.weight[k] = 1.0 / e;
  }
  return u;
}

PrecoderUpdate update_precoders(const SystemConfig& cfg, const CMat& H,
                                const std::vector<cxd>& q,
                                const std::vector<double>& c,
                                const WmmseOptions& opts) {
  H.check_shape(cfg.n_antennas, cfg.n_users, "update_precoders: H");
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  const double p_budget = cfg.power_budget;

  std::vector<cxd> scale(k_users);
  bool all_zero = true;
  for (std::size_t k = 0; k < k_users; ++k) {
    scale[k] = cfg.priority(k) * c[k] * std::conj(q[k]);
    if (scale[k] != cxd{0.0, 0.0}) all_zero = false;
  }
  if (all_zero) return {CMat(n, k_users), 0.0};

  // lower triangle of G = sum_k alpha_k c_k |q_k|^2 h_k h_k^H
  std::vector<cxd> g(n * n, cxd{0.0, 0.0});
  for (std::size_t k = 0; k < k_users; ++k) {
    const double f = cfg.priority(k) * c[k] * abs2(q[k]);
    if (f == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j)
        g[i * n + j] += f * H.col[k][i] * std::conj(H.col[k][j]);
  }

  double lambda = 0.0;
  RegularizedSolve at = solve_at_lambda(g, n, H, scale, lambda);
  if (at.singular) {
    lambda = 1e-12;  // exact-arithmetic rank deficiency corner
    at = solve_at_lambda(g, n, H, scale, lambda);
    if (at.singular) throw std::runtime_error("update_precoders: singular system");
  }
  if (at.power <= p_budget) return {std::move(at.W), lambda};

  // bracket: power(lambda) is strictly decreasing
  double lo = lambda;
  double hi = 1.0;
  int steps = 0;
  RegularizedSolve at_hi = solve_at_lambda(g, n, H, scale, hi);
  while (at_hi.power > p_budget) {
    if (++steps > opts.bisection_max_steps)
      throw std::runtime_error("bisection bracket failure");
    lo = hi;
    hi *= 2.0;
    at_hi = solve_at_lambda(g, n, H, scale, hi);
  }

  const double tol = opts.bisection_tol * p_budget;
  for (int it = 0; it < opts.bisection_max_steps; ++it) {
    const double mid = 0.5 * (lo + hi);
    RegularizedSolve at_mid = solve_at_lambda(g, n, H, scale, mid);
    if (std::abs(at_mid.power - p_budget) <= tol)
      return {std::move(at_mid.W), mid};
    if (at_mid.power > p_budget)
      lo = mid;
    else
      hi = mid;
  }
  throw std::runtime_error("bisection failed to reach tolerance");
}

WmmseSolution solve(const SystemConfig& cfg, const CMat& H, const WmmseOptions& opts) {
  cfg.validate();
  opts.validate();
  H.check_shape(cfg.n_antennas, cfg.n_users, "solve: H");

  WmmseSolution sol;
  sol.W = init_precoders(cfg, H, opts.init_mode, opts.init_seed);
  sol.trace.push_back(weighted_sum_rate(cfg, H, sol.W));

  for (int it = 0; it < opts.max_iter; ++it) {
    const std::vector<cxd> q = update_receive_filters(cfg, H, sol.W);
    const WeightUpdate wu = update_weights(cfg, H, sol.W, q);
    PrecoderUpdate pu = update_precoders(cfg, H, q, wu.weight, opts);
    sol.W = std::move(pu.W);
    sol.lambda = pu.lambda;
    sol.iterations = it + 1;

    const double prev = sol.trace.back();
    const double cur = weighted_sum_rate(cfg, H, sol.W);
    sol.trace.push_back(cur);
    if (opts.convergence_tol > 0.0) {
      const double rel = std::abs(cur - prev) / std::max(std::abs(prev), 1e-300);
      if (rel < opts.convergence_tol) break;
    }
  }
  return sol;
}

}  // namespace cpsp
