#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mrsc::baseline {

// Recursive systematic convolutional code with feedback 7 (octal) and
// feedforward 5, memory 2. State = (s1 << 1) | s2 where s1 is the newest bit.
struct Rsc75 {
  static constexpr int kStates = 4;
  static constexpr int kMemory = 2;
  static int next_state(int state, int input);
  static int parity(int state, int input);
  // Input that drives the feedback sum to zero (used for termination).
  static int flush_input(int state);
};

struct TurboConfig {
  std::size_t block_len = 512;
  std::vector<std::size_t> interleaver;  // interleaved[i] = bits[interleaver[i]]
  int iterations = 5;

  static TurboConfig make(std::size_t block_len, std::uint64_t seed, int iterations = 5);
  std::size_t coded_len() const { return 3 * (block_len + Rsc75::kMemory); }
  void validate() const;
};

// Encodes one block. Output per trellis step t is the triple
// (systematic, parity1, parity2); the last two steps are encoder 1's
// termination tail, during which encoder 2 is fed zeros and left open.
std::vector<std::uint8_t> turbo_encode(std::span<const std::uint8_t> bits, const TurboConfig& cfg);

// Single RSC encoder; with `terminate` the two tail inputs are appended to
// `systematic` and the matching parities to `parity`.
void rsc_encode(std::span<const std::uint8_t> bits, bool terminate,
                std::vector<std::uint8_t>& systematic, std::vector<std::uint8_t>& parity);

// LLR convention throughout: L = log P(b=0) / P(b=1).
struct ConstituentInput {
  std::span<const double> sys;      // per step, size n
  std::span<const double> parity;   // per step, size n
  std::span<const double> apriori;  // per step, may be shorter than n (missing = 0)
  bool terminated = true;           // end state forced to zero
  std::size_t forced_zero_tail = 0; // final steps whose input is known to be 0
};

// Max-Log-MAP APP LLRs for every trellis step.
std::vector<double> maxlog_map(const ConstituentInput& in);

// Full iterative decoder; `llr` has cfg.coded_len() entries in the same
// interlaced layout as turbo_encode. Returns hard decisions for the block.
std::vector<std::uint8_t> turbo_decode(std::span<const double> llr, const TurboConfig& cfg);

}  // namespace mrsc::baseline
