#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrsc/baseline/cdma.hpp"
#include "mrsc/baseline/huffman.hpp"
#include "mrsc/baseline/turbo.hpp"
#include "mrsc/channel.hpp"

namespace mrsc::baseline {

struct LinkStats {
  std::uint64_t info_bits = 0;
  std::uint64_t bit_errors = 0;
  std::uint64_t turbo_blocks = 0;
  std::uint64_t symbols_per_user = 0;
};

// Huffman -> turbo (rate 1/3) -> 64-QAM -> Walsh CDMA -> channel -> despread
// -> soft demap -> Max-Log-MAP -> Huffman. Every receiver sees the same
// superposed chip stream through its own channel realisation.
class ClassicalLink {
 public:
  ClassicalLink(HuffmanCodebook codebook, std::size_t users, std::size_t block_bits = 512,
                std::uint64_t interleaver_seed = 1, int iterations = 5);

  std::size_t users() const { return cdma_.users(); }
  const TurboConfig& turbo() const { return turbo_; }
  const CdmaConfig& cdma() const { return cdma_; }
  const HuffmanCodebook& codebook() const { return codebook_; }

  // One message per user. `frame` selects independent channel draws for the
  // same ChannelConfig seed.
  std::vector<std::string> transmit(const std::vector<std::string>& messages,
                                    const ChannelConfig& channel, std::uint64_t frame = 0,
                                    LinkStats* stats = nullptr) const;

  // Same chain on raw bit blocks (no Huffman): blocks[u] must be a multiple of
  // block_bits long. Returns decoded bits per user.
  std::vector<std::vector<std::uint8_t>> transmit_bits(
      const std::vector<std::vector<std::uint8_t>>& blocks, const ChannelConfig& channel,
      std::uint64_t frame = 0) const;

 private:
  HuffmanCodebook codebook_;
  CdmaConfig cdma_;
  TurboConfig turbo_;
};

struct BerPoint {
  double snr_db = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  double ber() const { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
};

// Uniform random information bits through the coded chain. Payloads and
// channel draws depend only on channel.seed, so points at different SNRs
// share their random numbers.
BerPoint measure_ber(const ClassicalLink& link, const ChannelConfig& channel,
                     std::uint64_t min_bits);

}  // namespace mrsc::baseline
