#include "mrsc/baseline/qam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrsc/error.hpp"

namespace mrsc::baseline {

namespace {
// Floor that keeps LLRs finite on noiseless links; max-log decisions are
// invariant to a common scale, so the exact value does not matter.
constexpr double kMinNoiseVar = 1e-12;
}

double Qam64::scale() { return 1.0 / std::sqrt(42.0); }

int Qam64::label_of_index(int index) { return index ^ (index >> 1); }

int Qam64::level_index(int label) {
  int idx = 0;
  for (int g = label; g; g >>= 1) idx ^= g;
  return idx;
}

double Qam64::level(int index) { return (2.0 * index - 7.0) * scale(); }

Complex Qam64::point(int symbol_bits) {
  const int i_label = (symbol_bits >> 3) & 7;
  const int q_label = symbol_bits & 7;
  return {level(level_index(i_label)), level(level_index(q_label))};
}

std::vector<Complex> qam64_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % Qam64::kBitsPerSymbol != 0)
    throw ConfigError("qam64: " + std::to_string(bits.size()) +
                      " bits is not a multiple of 6; pad before modulating");
  std::vector<Complex> out(bits.size() / Qam64::kBitsPerSymbol);
  for (std::size_t s = 0; s < out.size(); ++s) {
    int v = 0;
    for (int b = 0; b < Qam64::kBitsPerSymbol; ++b) v = (v << 1) | (bits[6 * s + b] & 1);
    out[s] = Qam64::point(v);
  }
  return out;
}

namespace {

// Writes the three LLRs of one axis.
void demap_axis(double y, double noise_var, double* out) {
  for (int bit = 0; bit < 3; ++bit) {
    double d0 = std::numeric_limits<double>::infinity(), d1 = d0;
    for (int idx = 0; idx < 8; ++idx) {
      const double d = (y - Qam64::level(idx)) * (y - Qam64::level(idx));
      if ((Qam64::label_of_index(idx) >> (2 - bit)) & 1) d1 = std::min(d1, d);
      else d0 = std::min(d0, d);
    }
    out[bit] = (d1 - d0) / noise_var;
  }
}

}  // namespace

std::vector<double> qam64_soft_demap(std::span<const Complex> symbols,
                                     std::span<const double> noise_var) {
  require(noise_var.size() == 1 || noise_var.size() == symbols.size(),
          "qam64_soft_demap: need one noise variance or one per symbol");
  std::vector<double> llr(symbols.size() * Qam64::kBitsPerSymbol);
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    const double nv = std::max(noise_var[noise_var.size() == 1 ? 0 : s], kMinNoiseVar);
    demap_axis(symbols[s].real(), nv, &llr[6 * s]);
    demap_axis(symbols[s].imag(), nv, &llr[6 * s + 3]);
  }
  return llr;
}

std::vector<double> qam64_soft_demap(std::span<const Complex> symbols, double noise_var) {
  const double nv[1] = {noise_var};
  return qam64_soft_demap(symbols, std::span<const double>(nv, 1));
}

}  // namespace mrsc::baseline
