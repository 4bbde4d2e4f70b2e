#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpsp/rng.hpp"
#include "cpsp/wmmse.hpp"

using namespace cpsp;

namespace {

SystemConfig make_cfg(std::size_t n, std::size_t k, double snr_db) {
  SystemConfig c;
  c.n_antennas = n;
  c.n_users = k;
  c.power_budget = SystemConfig::power_for_snr_db(1.0, snr_db);
  return c;
}

// reference complex solve (Gauss elimination with partial pivoting), used as
// an independent oracle for the regularized precoder system
CVec oracle_solve(std::vector<cxd> a, std::size_t n, CVec b) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const cxd f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  CVec x(n);
  for (std::size_t r = n; r-- > 0;) {
    cxd s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
    x[r] = s / a[r * n + r];
  }
  return x;
}

double power_at_lambda(const SystemConfig& cfg, const CMat& h, const std::vector<cxd>& q,
                       const std::vector<double>& c, double lambda) {
  const std::size_t n = cfg.n_antennas;
  std::vector<cxd> g(n * n, cxd{0.0, 0.0});
  for (std::size_t k = 0; k < cfg.n_users; ++k) {
    const double f = cfg.priority(k) * c[k] * std::norm(q[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        g[i * n + j] += f * h.col[k][i] * std::conj(h.col[k][j]);
  }
  for (std::size_t i = 0; i < n; ++i) g[i * n + i] += lambda;
  double power = 0.0;
  for (std::size_t k = 0; k < cfg.n_users; ++k) {
    const CVec x = oracle_solve(g, n, h.col[k]);
    const cxd s = cfg.priority(k) * c[k] * std::conj(q[k]);
    for (std::size_t i = 0; i < n; ++i) power += std::norm(s * x[i]);
  }
  return power;
}

}  // namespace

TEST_CASE("MRT initialization is feasible at full power") {
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 1);
  const CMat w = init_precoders(cfg, h, InitMode::MrtFullPower);
  CHECK(w.fro_norm2() ==
        doctest::Approx(cfg.power_budget).epsilon(1e-12));
}

TEST_CASE("single-user MRT points along the channel") {
  SystemConfig cfg = make_cfg(4, 1, 7.0);
  const CMat h = gen_rayleigh_channel(cfg, 2);
  const CMat w = init_precoders(cfg, h, InitMode::MrtFullPower);
  const double hn = h.col[0].norm();
  for (std::size_t i = 0; i < 4; ++i) {
    const cxd expect = std::sqrt(cfg.power_budget) * h.col[0][i] / hn;
    CHECK(w.col[0][i].real() == doctest::Approx(expect.real()).epsilon(1e-12));
    CHECK(w.col[0][i].imag() == doctest::Approx(expect.imag()).epsilon(1e-12));
  }
}

TEST_CASE("scaled random init is reproducible and feasible") {
  const SystemConfig cfg = make_cfg(4, 4, 5.0);
  const CMat h = gen_rayleigh_channel(cfg, 3);
  const CMat a = init_precoders(cfg, h, InitMode::ScaledRandom, 9);
  const CMat b = init_precoders(cfg, h, InitMode::ScaledRandom, 9);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 4; ++i) CHECK(a.col[k][i] == b.col[k][i]);
  CHECK(a.fro_norm2() == doctest::Approx(cfg.power_budget).epsilon(1e-12));
}

TEST_CASE("MRT falls back to a random direction for a zero channel column") {
  const SystemConfig cfg = make_cfg(4, 2, 0.0);
  CMat h = gen_rayleigh_channel(cfg, 4);
  for (std::size_t i = 0; i < 4; ++i) h.col[1][i] = 0.0;
  const CMat w = init_precoders(cfg, h, InitMode::MrtFullPower, 11);
  CHECK(w.col[1].norm2() == doctest::Approx(cfg.power_budget / 2).epsilon(1e-12));
  CHECK(w.fro_norm2() == doctest::Approx(cfg.power_budget).epsilon(1e-12));
}

TEST_CASE("receive filters: zero precoders give zero filters") {
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 5);
  const CMat w(4, 4);
  for (const cxd q : update_receive_filters(cfg, h, w)) CHECK(q == cxd(0.0, 0.0));
}

TEST_CASE("receive filter scalar case") {
  SystemConfig cfg = make_cfg(1, 1, 0.0);
  cfg.power_budget = 1.0;
  CMat h(1, 1), w(1, 1);
  h.col[0][0] = 1.0;
  w.col[0][0] = 1.0;
  const std::vector<cxd> q = update_receive_filters(cfg, h, w);
  CHECK(q[0].real() == doctest::Approx(0.5));
  CHECK(q[0].imag() == 0.0);

  const WeightUpdate u = update_weights(cfg, h, w, q);
  CHECK(u.mse[0] == doctest::Approx(0.5));     // |1/2-1|^2 + 1/4
  CHECK(u.weight[0] == doctest::Approx(2.0));
}

TEST_CASE("the MMSE filter is a local minimizer of the per-user MSE") {
  const SystemConfig cfg = make_cfg(4, 4, 12.0);
  const CMat h = gen_rayleigh_channel(cfg, 6);
  const CMat w = init_precoders(cfg, h, InitMode::MrtFullPower);
  const std::vector<cxd> q = update_receive_filters(cfg, h, w);
  const WeightUpdate base = update_weights(cfg, h, w, q);
  for (const double delta : {-1e-3, 1e-3}) {
    std::vector<cxd> qp = q;
    for (cxd& x : qp) x *= (1.0 + delta);
    const WeightUpdate pert = update_weights(cfg, h, w, qp);
    for (std::size_t k = 0; k < 4; ++k) CHECK(pert.mse[k] >= base.mse[k]);
  }
}

TEST_CASE("zero-filter weights are one") {
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 7);
  const CMat w = init_precoders(cfg, h, InitMode::MrtFullPower);
  const std::vector<cxd> q(4, cxd{0.0, 0.0});
  const WeightUpdate u = update_weights(cfg, h, w, q);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(u.mse[k] == doctest::Approx(1.0));
    CHECK(u.weight[k] == doctest::Approx(1.0));
  }
}

TEST_CASE("precoder update with all-zero weights returns zero") {
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 8);
  const std::vector<cxd> q(4, cxd{0.0, 0.0});
  const std::vector<double> c(4, 0.0);
  const PrecoderUpdate pu = update_precoders(cfg, h, q, c, WmmseOptions{});
  CHECK(pu.lambda == 0.0);
  CHECK(pu.W.fro_norm2() == 0.0);
}

TEST_CASE("single-user precoder update is colinear with the channel") {
  SystemConfig cfg = make_cfg(4, 1, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 9);
  const CMat w0 = init_precoders(cfg, h, InitMode::MrtFullPower);
  const std::vector<cxd> q = update_receive_filters(cfg, h, w0);
  const WeightUpdate u = update_weights(cfg, h, w0, q);
  const PrecoderUpdate pu = update_precoders(cfg, h, q, u.weight, WmmseOptions{});
  const double lhs = std::abs(inner(h.col[0], pu.W.col[0]));
  const double rhs = h.col[0].norm() * pu.W.col[0].norm();
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("bisection meets the power budget within its tolerance") {
  const SystemConfig cfg = make_cfg(4, 4, 18.0);
  WmmseOptions opts;
  opts.bisection_tol = 1e-8;
  int bound_cases = 0;
  for (std::uint64_t s = 0; s < 25; ++s) {
    const CMat h = gen_rayleigh_channel(cfg, derive_seed(100, s));
    const CMat w0 = init_precoders(cfg, h, InitMode::MrtFullPower);
    const std::vector<cxd> q = update_receive_filters(cfg, h, w0);
    const WeightUpdate u = update_weights(cfg, h, w0, q);
    const PrecoderUpdate pu = update_precoders(cfg, h, q, u.weight, opts);
    if (pu.lambda > 0.0) {
      ++bound_cases;
      CHECK(std::abs(pu.W.fro_norm2() - cfg.power_budget) <=
            1e-8 * cfg.power_budget);
    } else {
      CHECK(pu.W.fro_norm2() <= cfg.power_budget * (1.0 + 1e-9));
    }
  }
  CHECK(bound_cases > 0);
}

TEST_CASE("transmit power decreases strictly in the multiplier") {
  Rng rng(200);
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  for (int inst = 0; inst < 100; ++inst) {
    const CMat h = gen_rayleigh_channel(cfg, rng.raw());
    std::vector<cxd> q(4);
    std::vector<double> c(4);
    for (std::size_t k = 0; k < 4; ++k) {
      q[k] = rng.cnormal();
      c[k] = 0.1 + rng.uniform();
    }
    double prev = power_at_lambda(cfg, h, q, c, 1e-6);
    for (double lambda = 0.01; lambda < 100.0; lambda *= 4.0) {
      const double p = power_at_lambda(cfg, h, q, c, lambda);
      CHECK(p < prev);
      prev = p;
    }
  }
}

TEST_CASE("solver trace is monotone and feasible at every iteration") {
  const SystemConfig cfg = make_cfg(4, 4, 15.0);
  WmmseOptions opts;
  opts.convergence_tol = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const CMat h = gen_rayleigh_channel(cfg, derive_seed(300, s));
    const WmmseSolution sol = solve(cfg, h, opts);
    REQUIRE(sol.trace.size() == 11);
    for (std::size_t i = 1; i < sol.trace.size(); ++i)
      CHECK(sol.trace[i] >= sol.trace[i - 1] - 1e-9);
    CHECK(sol.W.fro_norm2() <= cfg.power_budget * (1.0 + 1e-9));
  }
}

TEST_CASE("single-user solution reaches the closed-form capacity") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    SystemConfig cfg = make_cfg(4, 1, 3.0 + static_cast<double>(s));
    const CMat h = gen_rayleigh_channel(cfg, derive_seed(400, s));
    const WmmseSolution sol = solve(cfg, h, WmmseOptions{});
    const double capacity =
        std::log2(1.0 + cfg.power_budget * h.col[0].norm2() / cfg.noise_variance);
    CHECK(sol.trace.back() == doctest::Approx(capacity).epsilon(1e-6));
  }
}

TEST_CASE("per-user phase rotations leave the per-user rates unchanged") {
  const SystemConfig cfg = make_cfg(4, 4, 12.0);
  WmmseOptions opts;
  opts.convergence_tol = 0.0;
  const CMat h = gen_rayleigh_channel(cfg, 17);
  const WmmseSolution base = solve(cfg, h, opts);
  CMat hr = h;
  for (std::size_t k = 0; k < 4; ++k) {
    const cxd ph = std::polar(1.0, 0.4 + 0.9 * static_cast<double>(k));
    for (std::size_t i = 0; i < 4; ++i) hr.col[k][i] *= ph;
  }
  const WmmseSolution rot = solve(cfg, hr, opts);
  for (std::size_t k = 0; k < 4; ++k) {
    const double r0 = std::log2(1.0 + sinr(cfg, h, base.W, k));
    const double r1 = std::log2(1.0 + sinr(cfg, hr, rot.W, k));
    CHECK(r1 == doctest::Approx(r0).epsilon(1e-8));
  }
}

TEST_CASE("the early stop fires once the WSR change is small") {
  const SystemConfig cfg = make_cfg(4, 4, 10.0);
  const CMat h = gen_rayleigh_channel(cfg, 23);
  WmmseOptions opts;
  opts.max_iter = 200;
  opts.convergence_tol = 1e-5;
  const WmmseSolution sol = solve(cfg, h, opts);
  CHECK(sol.iterations < 200);
  const double rel = std::abs(sol.trace.back() - sol.trace[sol.trace.size() - 2]) /
                     sol.trace[sol.trace.size() - 2];
  CHECK(rel < 1e-5);

  opts.convergence_tol = 0.0;  // disabled: runs the full budget
  opts.max_iter = 12;
  CHECK(solve(cfg, h, opts).iterations == 12);
}

TEST_CASE("options validation rejects a zero iteration budget") {
  WmmseOptions opts;
  opts.max_iter = 0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  const SystemConfig cfg = make_cfg(2, 2, 0.0);
  CHECK_THROWS_AS(solve(cfg, gen_rayleigh_channel(cfg, 1), opts), std::invalid_argument);
}
