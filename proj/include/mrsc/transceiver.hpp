#pragma once

// Learned transmitter (semantic encoder + channel encoder) and per-user
// receiver (channel decoder + semantic decoder).

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mrsc/layers.hpp"
#include "mrsc/params.hpp"
#include "mrsc/text.hpp"

namespace mrsc {

struct ArchConfig {
  std::size_t d_model = 128;
  std::size_t n_layers = 3;
  std::size_t n_heads = 8;
  std::size_t d_attn = 128;   // width of each of the Q/K/V projections
  std::size_t d_ff = 512;
  std::size_t n_ce = 16;      // channel-encoder outputs per token (n_ce/2 complex symbols)
  std::size_t n_cd = 128;     // channel-decoder hidden units
  std::size_t slot_len = 18;  // L
  std::size_t users = 2;      // K
  std::size_t vocab_size = 0;

  std::size_t seq_len() const { return users * slot_len; }
  // Throws ConfigError when the fields are inconsistent.
  void validate() const;

  static ArchConfig full();
  static ArchConfig tiny();
};

bool operator==(const ArchConfig& a, const ArchConfig& b);

std::string receiver_prefix_chi(int user);    // "chi_<user>"
std::string receiver_prefix_delta(int user);  // "delta_<user>"

// Token ids plus padding flags for `rows` rows of `arch.seq_len()` tokens.
struct TokenBatch {
  std::size_t rows = 0;
  std::shared_ptr<const std::vector<std::int32_t>> ids;
  std::vector<std::uint8_t> pad_mask;

  static TokenBatch from(const MergedBatch& b);
};

class Transmitter {
 public:
  // Registers (or picks up existing) "alpha/..." and "beta/..." tensors.
  Transmitter(const ArchConfig& arch, ParamStore& store, std::mt19937_64& rng);

  // M: [rows, seq_len, d_model]. PAD keys are masked out of self-attention.
  // When `attention` is given it receives each layer's weights.
  Tensor semantic_encode(const TokenBatch& batch, std::vector<Tensor>* attention = nullptr) const;
  // X: [rows, seq_len, n_ce], one dense map per token.
  Tensor channel_encode(const Tensor& semantic) const;
  Tensor transmit(const TokenBatch& batch) const;

  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  Tensor embedding_;
  std::vector<EncoderLayer> layers_;
  Linear channel_dense_;
};

class Receiver {
 public:
  // Registers (or picks up existing) "chi_<user>/..." and "delta_<user>/...".
  Receiver(const ArchConfig& arch, ParamStore& store, int user, std::mt19937_64& rng);

  // M_hat: [rows, seq_len, d_model] from equalised symbols [rows, seq_len, n_ce].
  Tensor channel_decode(const Tensor& received) const;

  // Teacher-forced logits [rows, len, vocab]; `decoder_input` holds
  // rows x len ids, targets shifted right behind START.
  Tensor decode_teacher(const Tensor& memory,
                        std::shared_ptr<const std::vector<std::int32_t>> decoder_input,
                        std::size_t rows, std::size_t len) const;

  // Autoregressive argmax from START; ties go to the lowest id. Once a slot
  // has produced END its remaining positions are filled with PAD. Returns
  // rows x max_len ids (max_len defaults to seq_len).
  std::vector<std::int32_t> decode_greedy(const Tensor& memory, std::size_t max_len = 0) const;

  int user() const { return user_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  int user_;
  Linear cd_hidden_, cd_out_;
  Tensor embedding_;
  std::vector<DecoderLayer> layers_;
  Linear output_;
};

// Decoder input for teacher forcing: [START, t_0, ..., t_{n-2}] per row.
std::vector<std::int32_t> shift_right(const std::vector<std::int32_t>& targets, std::size_t rows,
                                      std::size_t len);

// Lowest index among the maxima of each row of `logits` ([rows, width]).
std::vector<std::int32_t> argmax_rows(std::span<const double> logits, std::size_t width);

}  // namespace mrsc
