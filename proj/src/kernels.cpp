#include "mrsc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mrsc::kernels {

namespace {

thread_local bool t_counting = false;
thread_local OpCounts t_counts;

inline double at(const double* x, std::size_t r, std::size_t c, std::size_t rows,
                 std::size_t cols, Trans t) {
  return t == Trans::kNo ? x[r * cols + c] : x[c * rows + r];
}

void softmax_row(const double* x, const std::uint8_t* allowed, double* y, std::size_t c) {
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t j = 0; j < c; ++j) {
    if (allowed && !allowed[j]) continue;
    mx = std::max(mx, x[j]);
    any = true;
  }
  if (!any) {
    std::fill(y, y + c, 0.0);
    return;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    if (allowed && !allowed[j]) {
      y[j] = 0.0;
      continue;
    }
    y[j] = std::exp(x[j] - mx);
    sum += y[j];
  }
  for (std::size_t j = 0; j < c; ++j) y[j] /= sum;
}

}  // namespace

void begin_counting() {
  t_counting = true;
  t_counts = {};
}

OpCounts end_counting() {
  t_counting = false;
  return t_counts;
}

bool counting_enabled() { return t_counting; }

void count(std::uint64_t mults, std::uint64_t adds) {
  if (!t_counting) return;
  t_counts.mults += mults;
  t_counts.adds += adds;
}

namespace serial {

void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = accumulate ? c[i * m + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += at(a, i, p, n, k, ta) * at(b, p, j, k, m, tb);
      c[i * m + j] = acc;
    }
  }
}

void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c) {
  for (std::size_t i = 0; i < r; ++i)
    softmax_row(x + i * c, allowed ? allowed + i * c : nullptr, y + i * c, c);
}

}  // namespace serial

namespace omp {

// Same per-element summation order as the reference (p ascending), laid out
// for contiguous access on the innermost loop.
void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c + i * m;
    if (tb == Trans::kYes) {
      for (std::size_t j = 0; j < m; ++j) {
        const double* brow = b + j * k;
        double acc = accumulate ? crow[j] : 0.0;
        if (ta == Trans::kNo) {
          const double* arow = a + i * k;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < k; ++p) acc += a[p * n + i] * brow[p];
        }
        crow[j] = acc;
      }
    } else {
      if (!accumulate) std::fill(crow, crow + m, 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ta == Trans::kNo ? a[i * k + p] : a[p * n + i];
        const double* brow = b + p * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c) {
  const auto rows = static_cast<std::ptrdiff_t>(r);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    softmax_row(x + i * c, allowed ? allowed + i * c : nullptr, y + i * c, c);
  }
}

}  // namespace omp

void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate) {
  if (t_counting) count(n * k * m, n * m * (k > 0 ? k - 1 : 0) + (accumulate ? n * m : 0));
  omp::gemm(a, b, c, n, k, m, ta, tb, accumulate);
}

void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c) {
  omp::softmax_rows(x, allowed, y, r, c);
}

}  // namespace mrsc::kernels
