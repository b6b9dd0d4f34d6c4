// Serial reference kernels versus their OpenMP versions.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mrsc/kernels.hpp"

namespace k = mrsc::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <auto Gemm>
void bm_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Gemm(a.data(), b.data(), c.data(), n, n, n, k::Trans::kNo, k::Trans::kNo, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <auto Softmax>
void bm_softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 36;
  const auto x = random_vec(rows * cols, 3);
  std::vector<std::uint8_t> allowed(rows * cols, 1);
  for (std::size_t i = 0; i < allowed.size(); i += 5) allowed[i] = 0;
  std::vector<double> y(rows * cols);
  for (auto _ : state) {
    Softmax(x.data(), allowed.data(), y.data(), rows, cols);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

}  // namespace

BENCHMARK(bm_gemm<k::serial::gemm>)->Name("gemm/serial")->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(bm_gemm<k::omp::gemm>)->Name("gemm/omp")->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(bm_softmax<k::serial::softmax_rows>)->Name("softmax/serial")->Arg(576)->Arg(4608);
BENCHMARK(bm_softmax<k::omp::softmax_rows>)->Name("softmax/omp")->Arg(576)->Arg(4608);

BENCHMARK_MAIN();
