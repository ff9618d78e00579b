// Wall-time comparison of the serial reference kernels against their
// OpenMP variants. The two must agree bit for bit; this target only
// reports the speedups.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "styleval/image.hpp"
#include "styleval/kernels.hpp"
#include "styleval/parallel.hpp"
#include "styleval/rng.hpp"
#include "styleval/synthetic.hpp"

using styleval::kernels::DMat;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double omp_ms, bool equal) {
  std::printf("%-28s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, omp_ms, serial_ms / omp_ms,
              equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  styleval::Rng rng(123);
  std::printf("threads available: %d\n\n", omp_get_max_threads());

  {
    styleval::Image img = styleval::synthetic::noise(2048, 2048, rng);
    styleval::kernels::StatsVector a{}, b{};
    double serial = time_ms([&] { a = styleval::kernels::image_stats_serial(img); }, 3);
    double omp = time_ms([&] { b = styleval::kernels::image_stats_omp(img); }, 3);
    report("image_stats 2048x2048", serial, omp, a == b);
  }

  {
    const int c = 64, cells = 256 * 256;
    DMat f(c, cells);
    for (double& v : f.a) v = rng.uniform(-1.0, 1.0);
    DMat ga, gb;
    double serial = time_ms([&] { styleval::kernels::matmul_nt_serial(f, f, ga); }, 3);
    double omp = time_ms([&] { styleval::kernels::matmul_nt_omp(f, f, gb); }, 3);
    report("gram 64ch x 65536 cells", serial, omp, ga.a == gb.a);
  }

  {
    const int q = 512, k = 512, dim = 256;
    DMat queries(q, dim), keys(k, dim);
    for (double& v : queries.a) v = rng.uniform(-1.0, 1.0);
    for (double& v : keys.a) v = rng.uniform(-1.0, 1.0);
    styleval::kernels::normalize_rows(queries);
    styleval::kernels::normalize_rows(keys);
    DMat sa, sb;
    double serial =
        time_ms([&] { styleval::kernels::matmul_nt_serial(queries, keys, sa); }, 3);
    double omp =
        time_ms([&] { styleval::kernels::matmul_nt_omp(queries, keys, sb); }, 3);
    report("similarity 512x512x256", serial, omp, sa.a == sb.a);
  }

  return 0;
}
