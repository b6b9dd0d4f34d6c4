#include "mrsc/eval/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mrsc/error.hpp"

namespace mrsc {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int> ngram_counts(const std::vector<std::string>& words, std::size_t n) {
  std::map<Ngram, int> counts;
  if (words.size() < n) return counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i)
    ++counts[Ngram(words.begin() + static_cast<std::ptrdiff_t>(i),
                   words.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

BleuScore bleu(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference, std::size_t max_n) {
  require(!reference.empty(), "bleu: empty reference");
  require(max_n >= 1 && max_n <= BleuScore::kMaxN, "bleu: max_n must be in [1,4]");
  BleuScore s;
  if (candidate.empty()) return s;

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  s.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;

  double log_sum = 0.0;
  std::size_t orders = 0;
  bool zero = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto cand = ngram_counts(candidate, n);
    const auto ref = ngram_counts(reference, n);
    if (!cand.empty()) {
      int matched = 0;
      int total = 0;
      for (const auto& [gram, cnt] : cand) {
        total += cnt;
        auto it = ref.find(gram);
        if (it != ref.end()) matched += std::min(cnt, it->second);
      }
      s.precision[n - 1] = static_cast<double>(matched) / static_cast<double>(total);
    }
    // orders that either sentence is too short for are left out of the mean
    if (!cand.empty() && !ref.empty()) {
      ++orders;
      if (s.precision[n - 1] == 0.0)
        zero = true;
      else
        log_sum += std::log(s.precision[n - 1]);
    }
    if (orders > 0 && !zero)
      s.cumulative[n - 1] = s.brevity_penalty * std::exp(log_sum / static_cast<double>(orders));
    else
      s.cumulative[n - 1] = 0.0;
  }
  return s;
}

}  // namespace mrsc
