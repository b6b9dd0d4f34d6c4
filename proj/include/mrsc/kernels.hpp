#pragma once

// Dense inner loops used by the autodiff layer. Every kernel has a plain
// serial reference in `serial::` and an OpenMP version in `omp::`. Both walk
// the reduction dimension in the same order, so results are bit-identical
// and the parallel path can be checked against the reference exactly.

#include <cstddef>
#include <cstdint>

namespace mrsc::kernels {

enum class Trans : std::uint8_t { kNo, kYes };

// Operation counters. Only the linear-algebra kernels below report here
// (gemm, axpy-style adds, scaling); normalisation and nonlinearities do not.
struct OpCounts {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
};

// Enables counting on the calling thread and resets the counters.
void begin_counting();
// Stops counting and returns what was accumulated since begin_counting().
OpCounts end_counting();
bool counting_enabled();
void count(std::uint64_t mults, std::uint64_t adds);

namespace serial {

// C[n x m] (+)= op(A)[n x k] * op(B)[k x m]. With Trans::kYes, A is stored
// k x n (resp. B stored m x k).
void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate);

// Row-wise softmax of an r x c matrix. `allowed` (optional, r x c) marks the
// entries taking part; rows with nothing allowed become all zeros.
void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c);

}  // namespace serial

namespace omp {

void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate);

void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c);

}  // namespace omp

// Dispatch used by the tensor library: OpenMP when built with it, else serial.
void gemm(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
          std::size_t m, Trans ta, Trans tb, bool accumulate);
void softmax_rows(const double* x, const std::uint8_t* allowed, double* y, std::size_t r,
                  std::size_t c);

}  // namespace mrsc::kernels
