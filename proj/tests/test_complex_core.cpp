#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cpsp/complex_core.hpp"
#include "cpsp/rng.hpp"

using namespace cpsp;

namespace {

// independent scalar-loop SINR evaluation over raw arrays
double naive_sinr(std::size_t n, std::size_t k_users, double sigma2,
                  const std::vector<std::complex<double>>& h_flat,
                  const std::vector<std::complex<double>>& w_flat, std::size_t k) {
  auto dot = [&](std::size_t hk, std::size_t wj) {
    std::complex<double> s{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      s += std::conj(h_flat[hk * n + i]) * w_flat[wj * n + i];
    return s;
  };
  double num = std::norm(dot(k, k));
  double den = sigma2;
  for (std::size_t j = 0; j < k_users; ++j)
    if (j != k) den += std::norm(dot(k, j));
  return num / den;
}

std::vector<std::complex<double>> flatten(const CMat& m) {
  std::vector<std::complex<double>> f;
  for (const CVec& c : m.col) f.insert(f.end(), c.e.begin(), c.e.end());
  return f;
}

SystemConfig cfg44() {
  SystemConfig c;
  c.n_antennas = 4;
  c.n_users = 4;
  return c;
}

}  // namespace

TEST_CASE("rayleigh generation is deterministic in the seed") {
  const SystemConfig cfg = cfg44();
  const CMat a = gen_rayleigh_channel(cfg, 123);
  const CMat b = gen_rayleigh_channel(cfg, 123);
  const CMat c = gen_rayleigh_channel(cfg, 124);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.col[k][i] == b.col[k][i]);
    }
  CHECK(a.col[0][0] != c.col[0][0]);
}

TEST_CASE("rayleigh entries are unit variance") {
  SystemConfig cfg;
  cfg.n_antennas = 10;
  cfg.n_users = 10;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const CMat h = gen_rayleigh_channel(cfg, derive_seed(42, s));
    for (const CVec& c : h.col)
      for (const cxd& x : c.e) {
        sum += std::norm(x);
        ++count;
      }
  }
  CHECK(count == 100000);
  CHECK(sum / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("degenerate 1x1 generation") {
  SystemConfig cfg;
  cfg.n_antennas = 1;
  cfg.n_users = 1;
  const CMat h = gen_rayleigh_channel(cfg, 5);
  CHECK(h.rows == 1);
  CHECK(h.cols() == 1);
}

TEST_CASE("sinr single user unit case") {
  SystemConfig cfg;
  cfg.n_antennas = 1;
  cfg.n_users = 1;
  CMat h(1, 1), w(1, 1);
  h.col[0][0] = 1.0;
  w.col[0][0] = 1.0;
  CHECK(sinr(cfg, h, w, 0) == doctest::Approx(1.0));
  CHECK(sum_rate(cfg, h, w) == doctest::Approx(1.0));  // log2(2)
}

TEST_CASE("sinr with orthogonal precoders has no interference") {
  SystemConfig cfg;
  cfg.n_antennas = 2;
  cfg.n_users = 2;
  CMat h(2, 2), w(2, 2);
  h.col[0][0] = 1.0;
  h.col[1][1] = 1.0;
  w.col[0][0] = 1.0;
  w.col[1][1] = 1.0;
  CHECK(sinr(cfg, h, w, 0) == doctest::Approx(1.0));
}

TEST_CASE("sinr and sum rate match the naive loop") {
  const SystemConfig cfg = cfg44();
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CMat h(4, 4), w(4, 4);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t i = 0; i < 4; ++i) {
        h.col[k][i] = rng.cnormal();
        w.col[k][i] = rng.cnormal();
      }
    const auto hf = flatten(h), wf = flatten(w);
    double naive_rate = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double s = naive_sinr(4, 4, cfg.noise_variance, hf, wf, k);
      CHECK(sinr(cfg, h, w, k) == doctest::Approx(s).epsilon(1e-12));
      naive_rate += std::log2(1.0 + s);
    }
    CHECK(sum_rate(cfg, h, w) == doctest::Approx(naive_rate).epsilon(1e-12));
  }
}

TEST_CASE("all-zero precoders give zero rate") {
  const SystemConfig cfg = cfg44();
  const CMat h = gen_rayleigh_channel(cfg, 3);
  const CMat w(4, 4);
  CHECK(sum_rate(cfg, h, w) == 0.0);
}

TEST_CASE("global phase rotations leave SINR unchanged") {
  const SystemConfig cfg = cfg44();
  Rng rng(77);
  CMat h(4, 4), w(4, 4);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 4; ++i) {
      h.col[k][i] = rng.cnormal();
      w.col[k][i] = rng.cnormal();
    }
  const double base = sum_rate(cfg, h, w);
  for (double psi = 0.3; psi < 6.3; psi += 0.7) {
    CMat hr = h, wr = w;
    const cxd ph = std::polar(1.0, psi);
    for (std::size_t i = 0; i < 4; ++i) {
      hr.col[1][i] *= ph;
      wr.col[2][i] *= ph;
    }
    CHECK(sum_rate(cfg, hr, wr) == doctest::Approx(base).epsilon(1e-12));
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(sinr(cfg, hr, wr, k) == doctest::Approx(sinr(cfg, h, w, k)).epsilon(1e-12));
  }
}

TEST_CASE("single-user rate is monotone in transmit power") {
  SystemConfig cfg;
  cfg.n_antennas = 4;
  cfg.n_users = 1;
  const CMat h = gen_rayleigh_channel(cfg, 11);
  CMat w(4, 1);
  for (std::size_t i = 0; i < 4; ++i) w.col[0][i] = h.col[0][i];
  double prev = -1.0;
  for (double p = 0.1; p < 100.0; p *= 2.0) {
    CMat ws = w;
    const double f = std::sqrt(p / w.fro_norm2());
    for (std::size_t i = 0; i < 4; ++i) ws.col[0][i] *= f;
    const double r = sum_rate(cfg, h, ws);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("priorities weight the per-user rates") {
  SystemConfig cfg = cfg44();
  cfg.priorities = {2.0, 1.0, 0.5, 1.0};
  const CMat h = gen_rayleigh_channel(cfg, 21);
  const CMat w = gen_rayleigh_channel(cfg, 22);
  double manual = 0.0;
  for (std::size_t k = 0; k < 4; ++k)
    manual += cfg.priorities[k] * std::log2(1.0 + sinr(cfg, h, w, k));
  CHECK(weighted_sum_rate(cfg, h, w) == doctest::Approx(manual).epsilon(1e-12));
  CHECK(weighted_sum_rate(cfg, h, w) != doctest::Approx(sum_rate(cfg, h, w)));
}

TEST_CASE("shape mismatches are rejected") {
  const SystemConfig cfg = cfg44();
  const CMat h = gen_rayleigh_channel(cfg, 1);
  const CMat w(4, 2);
  CHECK_THROWS_AS(sinr(cfg, h, w, 0), std::invalid_argument);
  CHECK_THROWS_AS(sinr(cfg, h, h, 7), std::invalid_argument);
}

TEST_CASE("config validation") {
  SystemConfig cfg = cfg44();
  cfg.noise_variance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = cfg44();
  cfg.priorities = {1.0, 1.0};  // wrong length
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
