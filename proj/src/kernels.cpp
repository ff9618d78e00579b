#include "styleval/kernels.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>

#include "styleval/parallel.hpp"

namespace styleval::parallel {

namespace {
std::atomic<int> g_jobs{1};
}

void set_jobs(int n) {
  if (n < 0) n = 0;
  g_jobs.store(n);
  if (n > 0) omp_set_num_threads(n);
}

int jobs() { return g_jobs.load(); }

bool enabled() { return g_jobs.load() != 1; }

}  // namespace styleval::parallel

namespace styleval::kernels {

namespace {

inline void stats_row_partial(const Image& img, int y, double* sum3) {
  const std::uint8_t* p = img.at(y, 0);
  double r = 0.0, g = 0.0, b = 0.0;
  for (int x = 0; x < img.width; ++x) {
    r += p[3 * x] * (1.0 / 255.0);
    g += p[3 * x + 1] * (1.0 / 255.0);
    b += p[3 * x + 2] * (1.0 / 255.0);
  }
  sum3[0] = r;
  sum3[1] = g;
  sum3[2] = b;
}

inline void var_row_partial(const Image& img, int y, const double* mean3,
                            double* sum3) {
  const std::uint8_t* p = img.at(y, 0);
  double r = 0.0, g = 0.0, b = 0.0;
  for (int x = 0; x < img.width; ++x) {
    double dr = p[3 * x] * (1.0 / 255.0) - mean3[0];
    double dg = p[3 * x + 1] * (1.0 / 255.0) - mean3[1];
    double db = p[3 * x + 2] * (1.0 / 255.0) - mean3[2];
    r += dr * dr;
    g += dg * dg;
    b += db * db;
  }
  sum3[0] = r;
  sum3[1] = g;
  sum3[2] = b;
}

inline void patch_mean(const Image& img, int pi, int pj, double* out3) {
  const int y0 = pi * img.height / kStatsPatchGrid;
  const int y1 = (pi + 1) * img.height / kStatsPatchGrid;
  const int x0 = pj * img.width / kStatsPatchGrid;
  const int x1 = (pj + 1) * img.width / kStatsPatchGrid;
  out3[0] = out3[1] = out3[2] = 0.0;
  const long n = static_cast<long>(y1 - y0) * (x1 - x0);
  if (n <= 0) return;
  double r = 0.0, g = 0.0, b = 0.0;
  for (int y = y0; y < y1; ++y) {
    const std::uint8_t* p = img.at(y, x0);
    for (int x = x0; x < x1; ++x) {
      r += p[0] * (1.0 / 255.0);
      g += p[1] * (1.0 / 255.0);
      b += p[2] * (1.0 / 255.0);
      p += 3;
    }
  }
  out3[0] = r / n;
  out3[1] = g / n;
  out3[2] = b / n;
}

inline double dot(const double* a, const double* b, int k) {
  double acc = 0.0;
  for (int t = 0; t < k; ++t) acc += a[t] * b[t];
  return acc;
}

}  // namespace

// Serial reference. Row partials are combined in row order; the OpenMP
// variant below reproduces the same order, so the two agree bit for bit.
StatsVector image_stats_serial(const Image& img) {
  StatsVector out{};
  const int h = img.height;
  const double count = static_cast<double>(h) * img.width;
  if (count == 0.0) return out;

  std::vector<double> rows(static_cast<std::size_t>(h) * 3);
  for (int y = 0; y < h; ++y) {
    stats_row_partial(img, y, rows.data() + 3 * static_cast<std::size_t>(y));
  }
  for (int y = 0; y < h; ++y) {
    out[0] += rows[3 * static_cast<std::size_t>(y)];
    out[1] += rows[3 * static_cast<std::size_t>(y) + 1];
    out[2] += rows[3 * static_cast<std::size_t>(y) + 2];
  }
  for (int c = 0; c < 3; ++c) out[c] /= count;

  for (int y = 0; y < h; ++y) {
    var_row_partial(img, y, out.data(), rows.data() + 3 * static_cast<std::size_t>(y));
  }
  for (int y = 0; y < h; ++y) {
    out[3] += rows[3 * static_cast<std::size_t>(y)];
    out[4] += rows[3 * static_cast<std::size_t>(y) + 1];
    out[5] += rows[3 * static_cast<std::size_t>(y) + 2];
  }
  for (int c = 0; c < 3; ++c) out[3 + c] /= count;

  for (int pi = 0; pi < kStatsPatchGrid; ++pi) {
    for (int pj = 0; pj < kStatsPatchGrid; ++pj) {
      patch_mean(img, pi, pj, out.data() + 6 + (pi * kStatsPatchGrid + pj) * 3);
    }
  }
  return out;
}

StatsVector image_stats_omp(const Image& img) {
  StatsVector out{};
  const int h = img.height;
  const double count = static_cast<double>(h) * img.width;
  if (count == 0.0) return out;

  std::vector<double> rows(static_cast<std::size_t>(h) * 3);

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    stats_row_partial(img, y, rows.data() + 3 * static_cast<std::size_t>(y));
  }
  for (int y = 0; y < h; ++y) {
    out[0] += rows[3 * static_cast<std::size_t>(y)];
    out[1] += rows[3 * static_cast<std::size_t>(y) + 1];
    out[2] += rows[3 * static_cast<std::size_t>(y) + 2];
  }
  for (int c = 0; c < 3; ++c) out[c] /= count;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    var_row_partial(img, y, out.data(), rows.data() + 3 * static_cast<std::size_t>(y));
  }
  for (int y = 0; y < h; ++y) {
    out[3] += rows[3 * static_cast<std::size_t>(y)];
    out[4] += rows[3 * static_cast<std::size_t>(y) + 1];
    out[5] += rows[3 * static_cast<std::size_t>(y) + 2];
  }
  for (int c = 0; c < 3; ++c) out[3 + c] /= count;

#pragma omp parallel for schedule(static) collapse(2)
  for (int pi = 0; pi < kStatsPatchGrid; ++pi) {
    for (int pj = 0; pj < kStatsPatchGrid; ++pj) {
      patch_mean(img, pi, pj, out.data() + 6 + (pi * kStatsPatchGrid + pj) * 3);
    }
  }
  return out;
}

StatsVector image_stats(const Image& img) {
  return parallel::enabled() ? image_stats_omp(img) : image_stats_serial(img);
}

void matmul_nt_serial(const DMat& A, const DMat& B, DMat& out) {
  out = DMat(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < B.rows; ++j) {
      out.at(i, j) = dot(A.row(i), B.row(j), A.cols);
    }
  }
}

void matmul_nt_omp(const DMat& A, const DMat& B, DMat& out) {
  out = DMat(A.rows, B.rows);
#pragma omp parallel for schedule(static) collapse(2)
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < B.rows; ++j) {
      out.at(i, j) = dot(A.row(i), B.row(j), A.cols);
    }
  }
}

void matmul_nt(const DMat& A, const DMat& B, DMat& out) {
  if (parallel::enabled()) {
    matmul_nt_omp(A, B, out);
  } else {
    matmul_nt_serial(A, B, out);
  }
}

void normalize_rows(DMat& m) {
  for (int i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    double sq = 0.0;
    for (int c = 0; c < m.cols; ++c) sq += r[c] * r[c];
    if (sq > 0.0) {
      double inv = 1.0 / std::sqrt(sq);
      for (int c = 0; c < m.cols; ++c) r[c] *= inv;
    }
  }
}

}  // namespace styleval::kernels
