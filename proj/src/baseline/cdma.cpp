#include "mrsc/baseline/cdma.hpp"

#include <bit>

#include "mrsc/error.hpp"

namespace mrsc::baseline {

std::vector<std::vector<int>> walsh_hadamard(std::size_t n) {
  require(n > 0 && std::has_single_bit(n), "walsh_hadamard: size must be a power of two");
  std::vector<std::vector<int>> h{{1}};
  while (h.size() < n) {
    const std::size_t m = h.size();
    std::vector<std::vector<int>> next(2 * m, std::vector<int>(2 * m));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        next[i][j] = h[i][j];
        next[i][j + m] = h[i][j];
        next[i + m][j] = h[i][j];
        next[i + m][j + m] = -h[i][j];
      }
    h = std::move(next);
  }
  return h;
}

CdmaConfig::CdmaConfig(std::size_t users) : users_(users) {
  if (users == 0) throw ConfigError("cdma: need at least one user");
  length_ = std::bit_ceil(users);
  rows_ = walsh_hadamard(length_);
}

const std::vector<int>& CdmaConfig::code(std::size_t user) const {
  if (user >= length_)
    throw ConfigError("cdma: user " + std::to_string(user) + " has no code (length " +
                      std::to_string(length_) + ")");
  return rows_[user];
}

std::vector<Complex> CdmaConfig::spread(std::span<const Complex> symbols, std::size_t user) const {
  const auto& c = code(user);
  std::vector<Complex> chips(symbols.size() * length_);
  for (std::size_t i = 0; i < symbols.size(); ++i)
    for (std::size_t j = 0; j < length_; ++j)
      chips[i * length_ + j] = symbols[i] * static_cast<double>(c[j]);
  return chips;
}

std::vector<Complex> CdmaConfig::despread(std::span<const Complex> chips, std::size_t user) const {
  const auto& c = code(user);
  require(chips.size() % length_ == 0, "cdma: chip count is not a multiple of the code length");
  std::vector<Complex> out(chips.size() / length_);
  const double inv = 1.0 / static_cast<double>(length_);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < length_; ++j) acc += chips[i * length_ + j] * static_cast<double>(c[j]);
    out[i] = acc * inv;
  }
  return out;
}

}  // namespace mrsc::baseline
