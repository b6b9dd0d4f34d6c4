#include "mrsc/baseline/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mrsc/baseline/qam.hpp"
#include "mrsc/error.hpp"

namespace mrsc::baseline {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

ClassicalLink::ClassicalLink(HuffmanCodebook codebook, std::size_t users, std::size_t block_bits,
                             std::uint64_t interleaver_seed, int iterations)
    : codebook_(std::move(codebook)),
      cdma_(users),
      turbo_(TurboConfig::make(block_bits, interleaver_seed, iterations)) {
  if (turbo_.coded_len() % Qam64::kBitsPerSymbol != 0)
    throw ConfigError("baseline: coded block of " + std::to_string(turbo_.coded_len()) +
                      " bits does not fill whole 64-QAM symbols");
}

std::vector<std::vector<std::uint8_t>> ClassicalLink::transmit_bits(
    const std::vector<std::vector<std::uint8_t>>& blocks, const ChannelConfig& channel,
    std::uint64_t frame) const {
  const std::size_t K = users();
  const std::size_t C = cdma_.code_length();
  const std::size_t B = turbo_.block_len;
  require(blocks.size() == K, "baseline: need one payload per user");

  std::vector<std::vector<Complex>> symbols(K);
  std::size_t n_sym = 0;
  for (std::size_t u = 0; u < K; ++u) {
    require(blocks[u].size() % B == 0, "baseline: payload is not a whole number of blocks");
    for (std::size_t off = 0; off < blocks[u].size(); off += B) {
      const auto coded = turbo_encode(std::span(blocks[u]).subspan(off, B), turbo_);
      const auto s = qam64_modulate(coded);
      symbols[u].insert(symbols[u].end(), s.begin(), s.end());
    }
    n_sym = std::max(n_sym, symbols[u].size());
  }
  if (n_sym == 0) return std::vector<std::vector<std::uint8_t>>(K);

  // Superpose spread streams; shorter payloads are padded with silence.
  std::vector<Complex> chips(n_sym * C, Complex{0.0, 0.0});
  for (std::size_t u = 0; u < K; ++u) {
    auto padded = symbols[u];
    padded.resize(n_sym, Complex{0.0, 0.0});
    const auto c = cdma_.spread(padded, u);
    for (std::size_t i = 0; i < chips.size(); ++i) chips[i] += c[i];
  }
  const auto tx_raw = ComplexBlock::from_complex(1, chips.size(), chips);
  const double power = tx_raw.mean_power();
  const double gain = power > 0 ? 1.0 / std::sqrt(power) : 1.0;
  const auto tx = normalize_power(tx_raw);

  std::vector<std::vector<std::uint8_t>> out(K);
  for (std::size_t u = 0; u < K; ++u) {
    ChannelConfig ch = channel;
    ch.seed = mix(mix(channel.seed, frame), u);
    ch.fading_group = 0;  // one coefficient per frame and receiver
    const auto rx = pass_channel(tx, ch);

    std::vector<Complex> eq(rx.y.size());
    for (std::size_t i = 0; i < eq.size(); ++i) eq[i] = rx.y.at(i) / gain;
    const auto despread = cdma_.despread(eq, u);
    const double h2 = std::norm(rx.h.front());
    // Noise left on a despread symbol after equalising and undoing the gain.
    const double nv = rx.noise_variance / (std::max(h2, kOutageThreshold) * gain * gain *
                                           static_cast<double>(C));
    const auto llr = qam64_soft_demap(despread, nv);

    const std::size_t syms_per_block = turbo_.coded_len() / Qam64::kBitsPerSymbol;
    const std::size_t n_blocks = symbols[u].size() / syms_per_block;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      const auto dec = turbo_decode(
          std::span(llr).subspan(b * turbo_.coded_len(), turbo_.coded_len()), turbo_);
      out[u].insert(out[u].end(), dec.begin(), dec.end());
    }
  }
  return out;
}

std::vector<std::string> ClassicalLink::transmit(const std::vector<std::string>& messages,
                                                 const ChannelConfig& channel, std::uint64_t frame,
                                                 LinkStats* stats) const {
  require(messages.size() == users(), "baseline: need one message per user");
  const std::size_t B = turbo_.block_len;
  std::vector<std::vector<std::uint8_t>> payload(users());
  for (std::size_t u = 0; u < users(); ++u) {
    payload[u] = codebook_.encode_message(messages[u]);
    const std::size_t blocks = std::max<std::size_t>(1, (payload[u].size() + B - 1) / B);
    payload[u].resize(blocks * B, 0);
  }
  const auto decoded = transmit_bits(payload, channel, frame);
  std::vector<std::string> out(users());
  for (std::size_t u = 0; u < users(); ++u) {
    out[u] = codebook_.decode_message(decoded[u]);
    if (stats) {
      stats->info_bits += payload[u].size();
      stats->turbo_blocks += payload[u].size() / B;
      stats->symbols_per_user =
          std::max<std::uint64_t>(stats->symbols_per_user,
                                  payload[u].size() / B * turbo_.coded_len() / Qam64::kBitsPerSymbol);
      for (std::size_t i = 0; i < payload[u].size(); ++i)
        stats->bit_errors += payload[u][i] != decoded[u][i];
    }
  }
  return out;
}

BerPoint measure_ber(const ClassicalLink& link, const ChannelConfig& channel,
                     std::uint64_t min_bits) {
  BerPoint pt;
  pt.snr_db = channel.snr_db;
  std::mt19937_64 rng(mix(channel.seed, 0xbe5));
  std::bernoulli_distribution coin(0.5);
  const std::size_t B = link.turbo().block_len;
  for (std::uint64_t frame = 0; pt.bits < min_bits; ++frame) {
    std::vector<std::vector<std::uint8_t>> blocks(link.users(), std::vector<std::uint8_t>(B));
    for (auto& b : blocks)
      for (auto& bit : b) bit = coin(rng) ? 1 : 0;
    const auto dec = link.transmit_bits(blocks, channel, frame);
    for (std::size_t u = 0; u < link.users(); ++u) {
      pt.bits += B;
      for (std::size_t i = 0; i < B; ++i) pt.errors += blocks[u][i] != dec[u][i];
    }
  }
  return pt;
}

}  // namespace mrsc::baseline
