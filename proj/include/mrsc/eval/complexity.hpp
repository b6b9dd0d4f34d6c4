#pragma once

// Closed-form multiply/add counts for one forward pass, plus the matching
// instrumented measurement. Counted: matrix products, biases, residual adds,
// scalings and positional-encoding adds. Not counted: softmax, layer norm,
// activations, pooling and embedding lookups.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrsc/recognizer.hpp"
#include "mrsc/transceiver.hpp"

namespace mrsc::eval {

struct OpCount {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;

  OpCount& operator+=(const OpCount& o) {
    mults += o.mults;
    adds += o.adds;
    return *this;
  }
  friend OpCount operator+(OpCount a, const OpCount& b) { return a += b; }
  friend bool operator==(const OpCount&, const OpCount&) = default;
};

// tokens x (in -> out) dense layer with bias.
OpCount dense_ops(std::uint64_t tokens, std::uint64_t in, std::uint64_t out);
// Multi-head attention, lq queries over lk keys.
OpCount attention_ops(std::uint64_t lq, std::uint64_t lk, std::uint64_t d_model,
                      std::uint64_t d_attn, std::uint64_t heads);
OpCount encoder_stack_ops(std::uint64_t layers, std::uint64_t tokens, std::uint64_t d_model,
                          std::uint64_t d_attn, std::uint64_t heads, std::uint64_t d_ff);
OpCount decoder_stack_ops(std::uint64_t layers, std::uint64_t tokens, std::uint64_t memory,
                          std::uint64_t d_model, std::uint64_t d_attn, std::uint64_t heads,
                          std::uint64_t d_ff);

struct ComplexityReport {
  std::size_t seq_len = 0;
  // Semantic encoder, channel encoder, channel decoder and one teacher-forced
  // semantic decoder pass over a full row.
  OpCount encoder_decoder;
  // Recognizer on one sentence slot.
  OpCount recognizer;
  std::vector<std::pair<std::string, OpCount>> parts;
};

// `seq_len` 0 means arch.seq_len().
ComplexityReport estimate_complexity(const ArchConfig& arch, const RecognizerConfig& rec,
                                     std::size_t seq_len = 0);

// Runs the forward passes on random weights with the kernel counters on.
OpCount measure_encoder_decoder_ops(const ArchConfig& arch, std::uint64_t seed = 1);
OpCount measure_recognizer_ops(const RecognizerConfig& rec, std::uint64_t seed = 1);

}  // namespace mrsc::eval
