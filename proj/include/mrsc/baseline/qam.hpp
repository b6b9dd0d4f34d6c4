#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace mrsc::baseline {

using Complex = std::complex<double>;

// Square 64-QAM, Gray labelled per axis. Bits (b0 b1 b2) pick the in-phase
// level and (b3 b4 b5) the quadrature level; levels are {±1,±3,±5,±7}/sqrt(42).
struct Qam64 {
  static constexpr int kBitsPerSymbol = 6;
  static constexpr int kPoints = 64;
  static double scale();
  // Level index 0..7 (ascending amplitude) for a 3-bit Gray label.
  static int level_index(int label);
  static int label_of_index(int index);
  static double level(int index);
  static Complex point(int symbol_bits);
};

// Throws ConfigError when the bit count is not a multiple of 6.
std::vector<Complex> qam64_modulate(std::span<const std::uint8_t> bits);

// Max-log LLRs, log P(b=0)/P(b=1), for complex noise variance `noise_var`
// per symbol. `noise_var` may be given per symbol or as a single value.
std::vector<double> qam64_soft_demap(std::span<const Complex> symbols,
                                     std::span<const double> noise_var);
std::vector<double> qam64_soft_demap(std::span<const Complex> symbols, double noise_var);

}  // namespace mrsc::baseline
