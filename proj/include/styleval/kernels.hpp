#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "styleval/image.hpp"

namespace styleval::kernels {

// Row-major dense double matrix, the working type of all numeric kernels.
struct DMat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  DMat() = default;
  DMat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return a.data() + static_cast<std::size_t>(r) * cols;
  }
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
};

// ---------------------------------------------------------------------------
// Image statistics vector: 3 channel means, 3 channel variances (population,
// two-pass), then the 4x4 patch-mean grid in patch-row-major order with RGB
// interleaved per patch. Pixels are scaled to [0,1] by 1/255. Patch (i,j)
// covers rows [i*H/4, (i+1)*H/4) and columns [j*W/4, (j+1)*W/4) (integer
// division); an empty patch contributes 0. Channel sums accumulate per image
// row first and the row partials are then combined in row order, so the
// serial and OpenMP variants agree bit for bit.
// ---------------------------------------------------------------------------
inline constexpr int kStatsPatchGrid = 4;
inline constexpr int kStatsDim = 3 + 3 + kStatsPatchGrid * kStatsPatchGrid * 3;
using StatsVector = std::array<double, kStatsDim>;

StatsVector image_stats_serial(const Image& img);
StatsVector image_stats_omp(const Image& img);
StatsVector image_stats(const Image& img);  // dispatches on parallel::enabled()

// ---------------------------------------------------------------------------
// out = A * B^T. A is m x k, B is n x k, out is m x n. Each output element is
// one fixed-order dot product, so parallelizing over elements is exact.
// Covers both Gram matrices (A == B == feature map) and query/key cosine
// tables (rows pre-normalized).
// ---------------------------------------------------------------------------
void matmul_nt_serial(const DMat& A, const DMat& B, DMat& out);
void matmul_nt_omp(const DMat& A, const DMat& B, DMat& out);
void matmul_nt(const DMat& A, const DMat& B, DMat& out);

// L2-normalize each row in place; zero rows are left untouched.
void normalize_rows(DMat& m);

}  // namespace styleval::kernels
