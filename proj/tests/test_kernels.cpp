#include <doctest.h>

#include "styleval/kernels.hpp"
#include "styleval/parallel.hpp"
#include "styleval/rng.hpp"
#include "styleval/synthetic.hpp"
#include "testutil.hpp"

using namespace styleval;
using kernels::DMat;

TEST_SUITE("kernels") {

TEST_CASE("image stats match the hand oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    Image img = synthetic::noise(17 + trial * 7, 23 + trial * 3, rng);
    const auto stats = kernels::image_stats_serial(img);
    const auto oracle = testutil::stats_oracle(img);
    REQUIRE(oracle.size() == stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
      CHECK(stats[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("solid image stats: means exact, variances zero") {
  Image img = synthetic::solid(64, 64, {255, 0, 0});
  const auto stats = kernels::image_stats_serial(img);
  CHECK(stats[0] == doctest::Approx(1.0));
  CHECK(stats[1] == doctest::Approx(0.0));
  CHECK(stats[2] == doctest::Approx(0.0));
  CHECK(stats[3] == doctest::Approx(0.0));
  for (int p = 0; p < 16; ++p) {
    CHECK(stats[6 + 3 * p] == doctest::Approx(1.0));
    CHECK(stats[6 + 3 * p + 1] == doctest::Approx(0.0));
  }
}

TEST_CASE("serial and OpenMP stats agree bit for bit") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    Image img = synthetic::noise(33 + trial, 41 + 2 * trial, rng);
    const auto a = kernels::image_stats_serial(img);
    parallel::set_jobs(0);
    const auto b = kernels::image_stats_omp(img);
    parallel::set_jobs(1);
    CHECK(a == b);
  }
}

TEST_CASE("matmul serial and OpenMP agree bit for bit across job counts") {
  Rng rng(21);
  DMat A(13, 9), B(11, 9);
  for (double& v : A.a) v = rng.uniform(-2.0, 2.0);
  for (double& v : B.a) v = rng.uniform(-2.0, 2.0);
  DMat serial;
  kernels::matmul_nt_serial(A, B, serial);
  for (int jobs : {2, 3, 0}) {
    parallel::set_jobs(jobs);
    DMat omp;
    kernels::matmul_nt_omp(A, B, omp);
    CHECK(serial.a == omp.a);
  }
  parallel::set_jobs(1);
}

TEST_CASE("matmul matches direct dot products") {
  Rng rng(5);
  DMat A(4, 6), B(3, 6);
  for (double& v : A.a) v = rng.uniform(-1.0, 1.0);
  for (double& v : B.a) v = rng.uniform(-1.0, 1.0);
  DMat out;
  kernels::matmul_nt_serial(A, B, out);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int t = 0; t < 6; ++t) acc += A.at(i, t) * B.at(j, t);
      CHECK(out.at(i, j) == doctest::Approx(acc).epsilon(1e-15));
    }
  }
}

TEST_CASE("normalize_rows leaves zero rows and unit-norms the rest") {
  DMat m(2, 3);
  m.at(0, 0) = 3.0;
  m.at(0, 1) = 4.0;
  kernels::normalize_rows(m);
  CHECK(m.at(0, 0) == doctest::Approx(0.6));
  CHECK(m.at(0, 1) == doctest::Approx(0.8));
  CHECK(m.at(1, 0) == 0.0);
  CHECK(m.at(1, 2) == 0.0);
}

TEST_CASE("permuting pixels preserves channel means but not patch grid") {
  // Translation sensitivity lives in the patch grid only.
  Image top = synthetic::solid(8, 8, {10, 20, 30});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      top.at(y, x)[0] = 200;
    }
  }
  Image bottom = top;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      bottom.at(y, x)[0] = y >= 4 ? 200 : 10;
    }
  }
  const auto a = kernels::image_stats_serial(top);
  const auto b = kernels::image_stats_serial(bottom);
  for (int c = 0; c < 6; ++c) {
    CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
  }
  bool patch_differs = false;
  for (int i = 6; i < kernels::kStatsDim; ++i) {
    if (a[i] != b[i]) patch_differs = true;
  }
  CHECK(patch_differs);
}

}  // TEST_SUITE
