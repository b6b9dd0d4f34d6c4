#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mrsc::baseline {

using Complex = std::complex<double>;

// Synchronous CDMA with Walsh–Hadamard codes; user k gets row k.
class CdmaConfig {
 public:
  explicit CdmaConfig(std::size_t users);

  std::size_t users() const { return users_; }
  std::size_t code_length() const { return length_; }
  // Entries are ±1.
  const std::vector<int>& code(std::size_t user) const;

  // chips[i*C + j] = symbols[i] * code[j]
  std::vector<Complex> spread(std::span<const Complex> symbols, std::size_t user) const;
  // Normalised correlation: (1/C) sum_j chips[i*C + j] * code[j].
  std::vector<Complex> despread(std::span<const Complex> chips, std::size_t user) const;

 private:
  std::size_t users_;
  std::size_t length_;
  std::vector<std::vector<int>> rows_;
};

// Sylvester construction; `n` must be a power of two.
std::vector<std::vector<int>> walsh_hadamard(std::size_t n);

}  // namespace mrsc::baseline
