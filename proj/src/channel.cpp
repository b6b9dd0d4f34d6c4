#include "mrsc/channel.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "mrsc/error.hpp"

namespace mrsc {

ComplexBlock ComplexBlock::zeros(std::size_t rows, std::size_t symbols) {
  return {rows, symbols, std::vector<double>(2 * rows * symbols, 0.0)};
}

ComplexBlock ComplexBlock::from_complex(std::size_t rows, std::size_t symbols,
                                        const std::vector<Complex>& values) {
  require(values.size() == rows * symbols, "ComplexBlock: value count mismatch");
  auto b = zeros(rows, symbols);
  for (std::size_t i = 0; i < values.size(); ++i) b.set(i, values[i]);
  return b;
}

double ComplexBlock::mean_power() const {
  if (iq.empty()) return 0.0;
  double s = 0.0;
  for (double v : iq) s += v * v;
  return s / static_cast<double>(size());
}

const char* to_string(ChannelKind kind) {
  return kind == ChannelKind::kAwgn ? "awgn" : "rayleigh";
}

ChannelKind channel_kind_from(const std::string& name) {
  if (name == "awgn") return ChannelKind::kAwgn;
  if (name == "rayleigh") return ChannelKind::kRayleigh;
  throw ConfigError("unknown channel kind '" + name + "' (awgn | rayleigh)");
}

double noise_variance(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ComplexBlock normalize_power(const ComplexBlock& x) {
  require(x.size() > 0, "normalize_power: empty block");
  const double p = x.mean_power();
  if (p == 0.0) return x;
  ComplexBlock out = x;
  const double inv = 1.0 / std::sqrt(p);
  for (auto& v : out.iq) v *= inv;
  return out;
}

namespace {

void add_noise(ComplexBlock& y, double variance, std::mt19937_64& rng) {
  if (variance == 0.0) return;
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  for (auto& v : y.iq) v += n(rng);
}

std::size_t group_size(const ComplexBlock& x, const ChannelConfig& cfg) {
  const std::size_t g = cfg.fading_group == 0 ? x.symbols : cfg.fading_group;
  require(g > 0 && x.symbols % g == 0, "fading group must divide the row length");
  return g;
}

}  // namespace

ComplexBlock awgn(const ComplexBlock& x, const ChannelConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  ComplexBlock y = x;
  add_noise(y, noise_variance(cfg.snr_db), rng);
  return y;
}

FadedBlock rayleigh(const ComplexBlock& x, const ChannelConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  FadedBlock out;
  out.group = group_size(x, cfg);
  const std::size_t n_groups = x.size() / out.group;
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  out.h.resize(n_groups);
  for (auto& h : out.h) {
    const double re = n(rng);
    const double im = n(rng);
    h = {re, im};
  }
  out.y = x;
  for (std::size_t i = 0; i < x.size(); ++i) out.y.set(i, out.h[i / out.group] * x.at(i));
  add_noise(out.y, noise_variance(cfg.snr_db), rng);
  return out;
}

Equalized equalize(const ComplexBlock& y, const std::vector<Complex>& h, std::size_t group) {
  require(group > 0 && h.size() * group == y.size(), "equalize: coefficient count mismatch");
  Equalized out;
  out.y = y;
  for (std::size_t g = 0; g < h.size(); ++g) {
    if (std::abs(h[g]) <= kOutageThreshold) {
      out.outage_groups.push_back(g);
      continue;
    }
    for (std::size_t i = g * group; i < (g + 1) * group; ++i) out.y.set(i, y.at(i) / h[g]);
  }
  return out;
}

ChannelOutput pass_channel(const ComplexBlock& x, const ChannelConfig& cfg) {
  ChannelOutput out;
  out.noise_variance = noise_variance(cfg.snr_db);
  if (cfg.kind == ChannelKind::kAwgn) {
    out.y = awgn(x, cfg);
    out.group = x.symbols == 0 ? 1 : x.symbols;
    out.h.assign(x.rows, Complex{1.0, 0.0});
    return out;
  }
  auto faded = rayleigh(x, cfg);
  auto eq = equalize(faded.y, faded.h, faded.group);
  out.y = std::move(eq.y);
  out.h = std::move(faded.h);
  out.group = faded.group;
  out.outage_groups = std::move(eq.outage_groups);
  return out;
}

}  // namespace mrsc
