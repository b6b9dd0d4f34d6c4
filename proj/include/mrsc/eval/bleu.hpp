#pragma once

#include <array>
#include <string>
#include <vector>

namespace mrsc {

// Sentence-level BLEU against a single reference.
struct BleuScore {
  static constexpr std::size_t kMaxN = 4;
  std::array<double, kMaxN> precision{};   // clipped n-gram precision p_n
  std::array<double, kMaxN> cumulative{};  // BLEU-1 .. BLEU-4
  double brevity_penalty = 0.0;

  double bleu4() const { return cumulative[3]; }
};

// Modified n-gram precision with clipping, brevity penalty exp(1 - r/c) when
// the candidate is shorter, and the geometric mean over the orders that both
// sentences are long enough to have. An empty candidate scores 0; an empty
// reference is a contract violation.
BleuScore bleu(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, std::size_t max_n = 4);

}  // namespace mrsc
