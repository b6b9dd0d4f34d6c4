#include "mrsc/baseline/turbo.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "mrsc/error.hpp"

namespace mrsc::baseline {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int Rsc75::next_state(int state, int input) {
  const int s1 = (state >> 1) & 1, s2 = state & 1;
  const int a = input ^ s1 ^ s2;  // feedback 1 + D + D^2
  return (a << 1) | s1;
}

int Rsc75::parity(int state, int input) {
  const int s1 = (state >> 1) & 1, s2 = state & 1;
  const int a = input ^ s1 ^ s2;
  return a ^ s2;  // feedforward 1 + D^2
}

int Rsc75::flush_input(int state) {
  const int s1 = (state >> 1) & 1, s2 = state & 1;
  return s1 ^ s2;
}

TurboConfig TurboConfig::make(std::size_t block_len, std::uint64_t seed, int iterations) {
  if (block_len == 0) throw ConfigError("turbo: block length must be positive");
  if (iterations < 1) throw ConfigError("turbo: need at least one iteration");
  TurboConfig cfg;
  cfg.block_len = block_len;
  cfg.iterations = iterations;
  cfg.interleaver.resize(block_len);
  std::iota(cfg.interleaver.begin(), cfg.interleaver.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * block_len));
  std::shuffle(cfg.interleaver.begin(), cfg.interleaver.end(), rng);
  return cfg;
}

void TurboConfig::validate() const {
  if (interleaver.size() != block_len) throw ConfigError("turbo: interleaver size mismatch");
  std::vector<bool> seen(block_len, false);
  for (auto p : interleaver) {
    if (p >= block_len || seen[p]) throw ConfigError("turbo: interleaver is not a permutation");
    seen[p] = true;
  }
  if (iterations < 1) throw ConfigError("turbo: need at least one iteration");
}

void rsc_encode(std::span<const std::uint8_t> bits, bool terminate,
                std::vector<std::uint8_t>& systematic, std::vector<std::uint8_t>& parity) {
  int s = 0;
  systematic.clear();
  parity.clear();
  for (auto b : bits) {
    const int u = b & 1;
    systematic.push_back(static_cast<std::uint8_t>(u));
    parity.push_back(static_cast<std::uint8_t>(Rsc75::parity(s, u)));
    s = Rsc75::next_state(s, u);
  }
  if (terminate) {
    for (int i = 0; i < Rsc75::kMemory; ++i) {
      const int u = Rsc75::flush_input(s);
      systematic.push_back(static_cast<std::uint8_t>(u));
      parity.push_back(static_cast<std::uint8_t>(Rsc75::parity(s, u)));
      s = Rsc75::next_state(s, u);
    }
  }
}

std::vector<std::uint8_t> turbo_encode(std::span<const std::uint8_t> bits, const TurboConfig& cfg) {
  if (bits.size() != cfg.block_len)
    throw ConfigError("turbo: block has " + std::to_string(bits.size()) + " bits, config expects " +
                      std::to_string(cfg.block_len));
  cfg.validate();
  std::vector<std::uint8_t> sys1, par1, sys2, par2;
  rsc_encode(bits, true, sys1, par1);
  std::vector<std::uint8_t> inter(cfg.block_len + Rsc75::kMemory, 0);
  for (std::size_t i = 0; i < cfg.block_len; ++i) inter[i] = bits[cfg.interleaver[i]];
  rsc_encode(inter, false, sys2, par2);

  std::vector<std::uint8_t> out;
  out.reserve(cfg.coded_len());
  for (std::size_t t = 0; t < cfg.block_len + Rsc75::kMemory; ++t) {
    out.push_back(sys1[t]);
    out.push_back(par1[t]);
    out.push_back(par2[t]);
  }
  return out;
}

std::vector<double> maxlog_map(const ConstituentInput& in) {
  const std::size_t n = in.sys.size();
  require(in.parity.size() == n, "maxlog_map: parity length mismatch");
  require(in.apriori.size() <= n, "maxlog_map: a-priori longer than trellis");
  require(in.forced_zero_tail <= n, "maxlog_map: tail longer than trellis");
  constexpr int S = Rsc75::kStates;

  auto la = [&](std::size_t t) { return t < in.apriori.size() ? in.apriori[t] : 0.0; };
  auto allowed = [&](std::size_t t, int u) { return u == 0 || t + in.forced_zero_tail < n; };
  // Branch metric: half the correlation of the bipolar labels with the LLRs.
  auto gamma = [&](std::size_t t, int s, int u) {
    const double xu = u ? -1.0 : 1.0;
    const double xp = Rsc75::parity(s, u) ? -1.0 : 1.0;
    return 0.5 * (xu * (in.sys[t] + la(t)) + xp * in.parity[t]);
  };

  std::vector<double> alpha((n + 1) * S, kNegInf), beta((n + 1) * S, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    for (int s = 0; s < S; ++s) {
      const double a = alpha[t * S + s];
      if (a == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        double& dst = alpha[(t + 1) * S + Rsc75::next_state(s, u)];
        dst = std::max(dst, a + gamma(t, s, u));
      }
    }
  }
  for (int s = 0; s < S; ++s) beta[n * S + s] = (in.terminated && s != 0) ? kNegInf : 0.0;
  for (std::size_t t = n; t-- > 0;) {
    for (int s = 0; s < S; ++s) {
      double best = kNegInf;
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        const double b = beta[(t + 1) * S + Rsc75::next_state(s, u)];
        if (b == kNegInf) continue;
        best = std::max(best, b + gamma(t, s, u));
      }
      beta[t * S + s] = best;
    }
  }

  std::vector<double> app(n);
  for (std::size_t t = 0; t < n; ++t) {
    double m[2] = {kNegInf, kNegInf};
    for (int s = 0; s < S; ++s) {
      const double a = alpha[t * S + s];
      if (a == kNegInf) continue;
      for (int u = 0; u < 2; ++u) {
        if (!allowed(t, u)) continue;
        const double b = beta[(t + 1) * S + Rsc75::next_state(s, u)];
        if (b == kNegInf) continue;
        m[u] = std::max(m[u], a + gamma(t, s, u) + b);
      }
    }
    // A step with one side unreachable is certain; report a saturated LLR.
    if (m[1] == kNegInf) app[t] = std::numeric_limits<double>::max();
    else if (m[0] == kNegInf) app[t] = -std::numeric_limits<double>::max();
    else app[t] = m[0] - m[1];
  }
  return app;
}

std::vector<std::uint8_t> turbo_decode(std::span<const double> llr, const TurboConfig& cfg) {
  if (llr.size() != cfg.coded_len())
    throw ConfigError("turbo: expected " + std::to_string(cfg.coded_len()) + " LLRs, got " +
                      std::to_string(llr.size()));
  const std::size_t K = cfg.block_len;
  const std::size_t n = K + Rsc75::kMemory;
  std::vector<double> sys1(n), par1(n), sys2(n, 0.0), par2(n);
  for (std::size_t t = 0; t < n; ++t) {
    sys1[t] = llr[3 * t];
    par1[t] = llr[3 * t + 1];
    par2[t] = llr[3 * t + 2];
  }
  for (std::size_t i = 0; i < K; ++i) sys2[i] = sys1[cfg.interleaver[i]];

  std::vector<double> ext12(K, 0.0), ext21(K, 0.0), apriori(K), app1, app2;
  for (int it = 0; it < cfg.iterations; ++it) {
    app1 = maxlog_map({sys1, par1, ext21, true, 0});
    for (std::size_t i = 0; i < K; ++i) ext12[i] = app1[i] - sys1[i] - ext21[i];
    for (std::size_t i = 0; i < K; ++i) apriori[i] = ext12[cfg.interleaver[i]];
    app2 = maxlog_map({sys2, par2, apriori, false, Rsc75::kMemory});
    for (std::size_t i = 0; i < K; ++i)
      ext21[cfg.interleaver[i]] = app2[i] - sys2[i] - apriori[i];
  }
  // Final APP in natural order from decoder 2.
  std::vector<std::uint8_t> out(K);
  for (std::size_t i = 0; i < K; ++i) out[cfg.interleaver[i]] = app2[i] < 0.0 ? 1 : 0;
  return out;
}

}  // namespace mrsc::baseline
