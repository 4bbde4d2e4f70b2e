// Timing comparison of the serial reference kernels against the OpenMP
// versions, plus the batch label solver. Usage: bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "cpsp/dataset.hpp"
#include "cpsp/kernels.hpp"
#include "cpsp/rng.hpp"

using namespace cpsp;

namespace {

double time_ms(int repeats, auto&& body) {
  body();  // warmup
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) body();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / repeats;
}

void fill(std::vector<double>& v, std::uint64_t seed) {
  Rng rng(seed);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
}

void row(const char* name, double gflop, int threads, auto&& serial_body,
         auto&& omp_body) {
  kernels::set_threads(1);
  const double ts = time_ms(10, serial_body);
  kernels::set_threads(threads);
  const double tp = time_ms(10, omp_body);
  std::printf("%-12s %10.3f %10.3f %7.2fx %10.2f\n", name, ts, tp, ts / tp,
              gflop / (tp * 1e-3));
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 4;

  const std::size_t m = 1024, n = 256, k = 256;
  std::vector<double> a(m * k), b(k * n), bt(n * k), x(m * n), c(m * n), ct(k * n);
  fill(a, 1);
  fill(b, 2);
  fill(bt, 3);
  fill(x, 4);
  const double gflop = 2.0 * m * n * k / 1e9;

  std::printf("%-12s %10s %10s %8s %10s\n", "kernel", "serial ms", "omp ms", "speedup",
              "GF/s");
  row("gemm_nn", gflop, threads,
      [&] { kernels::serial::gemm_nn(m, n, k, a.data(), b.data(), c.data()); },
      [&] { kernels::gemm_nn(m, n, k, a.data(), b.data(), c.data()); });
  row("gemm_nt", gflop, threads,
      [&] { kernels::serial::gemm_nt(m, n, k, a.data(), bt.data(), c.data()); },
      [&] { kernels::gemm_nt(m, n, k, a.data(), bt.data(), c.data()); });
  row("gemm_tn", gflop, threads,
      [&] { kernels::serial::gemm_tn(k, n, m, a.data(), x.data(), ct.data()); },
      [&] { kernels::gemm_tn(k, n, m, a.data(), x.data(), ct.data()); });

  // batch label generation: per-sample seeding keeps parallel output
  // identical to serial output
  SystemConfig cfg;
  WmmseOptions opts;
  row("gen_512", 0.0, threads, [&] { generate_dataset(cfg, 512, 7, opts); },
      [&] { generate_dataset(cfg, 512, 7, opts); });
  return 0;
}
