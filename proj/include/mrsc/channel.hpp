#pragma once

// Complex-baseband channel shared by the learned and the classical chains:
// power normalisation, AWGN, block Rayleigh fading and zero-forcing
// equalisation with perfect channel knowledge.

#include <complex>
#include <cstdint>
#include <vector>

namespace mrsc {

using Complex = std::complex<double>;

// `rows` blocks of `symbols` complex values, interleaved (re, im).
struct ComplexBlock {
  std::size_t rows = 0;
  std::size_t symbols = 0;
  std::vector<double> iq;

  static ComplexBlock zeros(std::size_t rows, std::size_t symbols);
  static ComplexBlock from_complex(std::size_t rows, std::size_t symbols,
                                   const std::vector<Complex>& values);

  std::size_t size() const { return rows * symbols; }
  Complex at(std::size_t i) const { return {iq[2 * i], iq[2 * i + 1]}; }
  void set(std::size_t i, Complex v) {
    iq[2 * i] = v.real();
    iq[2 * i + 1] = v.imag();
  }
  double mean_power() const;
};

enum class ChannelKind { kAwgn, kRayleigh };

const char* to_string(ChannelKind kind);
ChannelKind channel_kind_from(const std::string& name);

struct ChannelConfig {
  ChannelKind kind = ChannelKind::kAwgn;
  double snr_db = 12.0;  // +inf gives a noiseless channel
  std::uint64_t seed = 1;
  // Complex symbols sharing one fading coefficient; 0 means a whole row.
  std::size_t fading_group = 0;
};

// sigma^2 = 10^(-snr_db/10) for unit signal power; 0 at +inf.
double noise_variance(double snr_db);

// x / sqrt(mean |x|^2) over the whole block; an all-zero block is unchanged.
ComplexBlock normalize_power(const ComplexBlock& x);

// y = x + w, w ~ CN(0, sigma^2).
ComplexBlock awgn(const ComplexBlock& x, const ChannelConfig& cfg);

struct FadedBlock {
  ComplexBlock y;
  std::vector<Complex> h;  // one per fading group
  std::size_t group = 0;   // complex symbols per coefficient
};

// y = h x + w with h ~ CN(0, 1) drawn per fading group.
FadedBlock rayleigh(const ComplexBlock& x, const ChannelConfig& cfg);

struct Equalized {
  ComplexBlock y;
  std::vector<std::size_t> outage_groups;  // |h| <= 1e-12, left as received
};

inline constexpr double kOutageThreshold = 1e-12;

// y / h per fading group. Groups in outage are reported, not zeroed.
Equalized equalize(const ComplexBlock& y, const std::vector<Complex>& h, std::size_t group);

// Channel draw plus equalisation. For AWGN every coefficient is 1.
struct ChannelOutput {
  ComplexBlock y;          // equalised
  std::vector<Complex> h;  // per fading group
  std::size_t group = 0;
  std::vector<std::size_t> outage_groups;
  double noise_variance = 0.0;  // before equalisation
};

ChannelOutput pass_channel(const ComplexBlock& x, const ChannelConfig& cfg);

}  // namespace mrsc
