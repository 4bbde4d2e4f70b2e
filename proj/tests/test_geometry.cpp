#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpsp/geometry.hpp"
#include "cpsp/rng.hpp"

using namespace cpsp;

namespace {

constexpr double kPi = 3.14159265358979323846;

CVec random_cvec(Rng& rng, std::size_t n) {
  CVec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rng.cnormal();
  return x;
}

}  // namespace

TEST_CASE("projection removes the global phase") {
  CVec x{cxd(0.0, 1.0), 0.0, 0.0, 0.0};
  const CpsProjection p = project_to_cps(x);
  CHECK(p.norm == doctest::Approx(1.0));
  CHECK(p.point.v[0].real() == doctest::Approx(1.0));
  CHECK(p.point.v[0].imag() == 0.0);

  CVec y{cxd(2.0, 0.0), 0.0, 0.0, 0.0};
  const CpsProjection q = project_to_cps(y);
  CHECK(q.norm == doctest::Approx(2.0));
  CHECK(q.point.v[0].real() == doctest::Approx(1.0));
}

TEST_CASE("projection is invariant to complex scaling") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const CVec x = random_cvec(rng, 4);
    const CpsProjection base = project_to_cps(x);
    for (double psi = 0.0; psi < 2.0 * kPi; psi += kPi / 7.0) {
      const cxd s = std::polar(1.7, psi);  // nonzero complex scale
      CVec y(4);
      for (std::size_t i = 0; i < 4; ++i) y[i] = s * x[i];
      const CpsProjection rot = project_to_cps(y);
      for (std::size_t i = 0; i < 4; ++i) {
        CHECK(rot.point.v[i].real() ==
              doctest::Approx(base.point.v[i].real()).epsilon(1e-12));
        CHECK(rot.point.v[i].imag() ==
              doctest::Approx(base.point.v[i].imag()).epsilon(1e-12));
      }
      CHECK(rot.norm == doctest::Approx(1.7 * base.norm).epsilon(1e-12));
    }
  }
}

TEST_CASE("projection rejects the zero vector and uses the first nonzero reference") {
  CHECK_THROWS_AS(project_to_cps(CVec(3)), std::domain_error);

  CVec x{0.0, cxd(0.0, 2.0), cxd(1.0, 1.0)};
  const CpsProjection p = project_to_cps(x);
  // reference element 1 becomes real non-negative
  CHECK(p.point.v[1].imag() == 0.0);
  CHECK(p.point.v[1].real() > 0.0);
  CHECK(p.point.v[0] == cxd(0.0, 0.0));
  CHECK(p.point.v.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hyperspherical coordinates of basis vectors") {
  CpsPoint e1;
  e1.v = CVec{1.0, 0.0, 0.0, 0.0};
  const HypersphericalCoords h1 = to_hyperspherical(e1);
  for (double t : h1.theta) CHECK(t == 0.0);
  for (double f : h1.phi) CHECK(f == 0.0);

  CpsPoint en;
  en.v = CVec{0.0, 0.0, 0.0, 1.0};
  const HypersphericalCoords hn = to_hyperspherical(en);
  for (double t : hn.theta) CHECK(t == doctest::Approx(kPi / 2));
  for (double f : hn.phi) CHECK(f == 0.0);
}

TEST_CASE("two-dimensional diagonal point") {
  CpsPoint p;
  p.v = CVec{cxd(1.0 / std::sqrt(2.0), 0.0), cxd(1.0 / std::sqrt(2.0), 0.0)};
  const HypersphericalCoords h = to_hyperspherical(p);
  CHECK(h.theta[0] == doctest::Approx(kPi / 4).epsilon(1e-15));  // atan(1)
  CHECK(h.phi[0] == 0.0);
}

TEST_CASE("from_hyperspherical builds unit vectors and round-trips") {
  Rng rng(2);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + (rng.raw() % 7);
    const CpsPoint p = project_to_cps(random_cvec(rng, n)).point;
    const HypersphericalCoords h = to_hyperspherical(p);
    const CpsPoint q = from_hyperspherical(h);
    REQUIRE(q.dim() == n);
    CHECK(std::abs(q.v.norm() - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(q.v[i].real() - p.v[i].real()) <= 1e-10);
      CHECK(std::abs(q.v[i].imag() - p.v[i].imag()) <= 1e-10);
    }
  }
}

TEST_CASE("tail norms equal the sine products") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 8;
    HypersphericalCoords h;
    for (std::size_t m = 0; m + 1 < n; ++m) {
      h.theta.push_back(rng.uniform(0.0, kPi / 2));
      h.phi.push_back(rng.uniform(-kPi, kPi));
    }
    const CpsPoint u = from_hyperspherical(h);
    double sin_prod = 1.0;
    for (std::size_t m = 0; m + 1 < n; ++m) {
      sin_prod *= std::sin(h.theta[m]);
      double tail = 0.0;
      for (std::size_t i = m + 1; i < n; ++i) tail += std::norm(u.v[i]);
      CHECK(std::abs(std::sqrt(tail) - sin_prod) <= 1e-12);
    }
  }
}

TEST_CASE("all-zero angles give the first basis vector") {
  HypersphericalCoords h;
  h.theta = {0.0, 0.0, 0.0};
  h.phi = {0.0, 0.0, 0.0};
  const CpsPoint p = from_hyperspherical(h);
  CHECK(p.v[0].real() == 1.0);
  for (std::size_t i = 1; i < 4; ++i) CHECK(p.v[i] == cxd(0.0, 0.0));
}

TEST_CASE("out-of-range angles are rejected") {
  HypersphericalCoords h;
  h.theta = {1.7};  // > pi/2
  h.phi = {0.0};
  CHECK_THROWS_AS(from_hyperspherical(h), std::domain_error);
  h.theta = {0.3};
  h.phi = {4.0};  // > pi
  CHECK_THROWS_AS(from_hyperspherical(h), std::domain_error);
}

TEST_CASE("embedding uses 2N-1 coordinates and inverts") {
  Rng rng(4);
  const CpsPoint p = project_to_cps(random_cvec(rng, 5)).point;
  std::vector<double> emb(embed_dim(5));
  embed_cps(p, emb);
  CHECK(emb.size() == 9);
  const CpsPoint q = unembed_cps(emb, 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(q.v[i] == p.v[i]);

  // hyperspherical coordinates use two fewer parameters than the embedding
  const HypersphericalCoords h = to_hyperspherical(p);
  CHECK(h.theta.size() + h.phi.size() == 8);
}

TEST_CASE("phase convention for zero components") {
  CpsPoint p;
  p.v = CVec{cxd(0.6, 0.0), cxd(0.0, 0.0), cxd(0.8, 0.0)};
  const HypersphericalCoords h = to_hyperspherical(p);
  CHECK(h.phi[0] == 0.0);  // angle of an exact zero
  const CpsPoint q = from_hyperspherical(h);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(q.v[i].real() - p.v[i].real()) <= 1e-12);
    CHECK(std::abs(q.v[i].imag() - p.v[i].imag()) <= 1e-12);
  }
}
