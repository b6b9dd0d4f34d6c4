#include "mrsc/eval/complexity.hpp"

#include <random>

#include "mrsc/kernels.hpp"

namespace mrsc::eval {

namespace {

// n x k times k x m.
OpCount gemm_ops(std::uint64_t n, std::uint64_t k, std::uint64_t m) {
  return {n * k * m, k > 0 ? n * m * (k - 1) : 0};
}

OpCount adds(std::uint64_t n) { return {0, n}; }
OpCount mults(std::uint64_t n) { return {n, 0}; }

}  // namespace

OpCount dense_ops(std::uint64_t tokens, std::uint64_t in, std::uint64_t out) {
  return gemm_ops(tokens, in, out) + adds(tokens * out);
}

OpCount attention_ops(std::uint64_t lq, std::uint64_t lk, std::uint64_t d_model,
                      std::uint64_t d_attn, std::uint64_t heads) {
  const std::uint64_t dh = d_attn / heads;
  OpCount c = dense_ops(lq, d_model, d_attn);         // Q
  c += dense_ops(lk, d_model, d_attn);                // K
  c += dense_ops(lk, d_model, d_attn);                // V
  for (std::uint64_t h = 0; h < heads; ++h) {
    c += gemm_ops(lq, dh, lk);                        // Q K^T
    c += mults(lq * lk);                              // 1/sqrt(dh)
    c += gemm_ops(lq, lk, dh);                        // P V
  }
  c += dense_ops(lq, d_attn, d_model);                // output projection
  return c;
}

OpCount encoder_stack_ops(std::uint64_t layers, std::uint64_t tokens, std::uint64_t d_model,
                          std::uint64_t d_attn, std::uint64_t heads, std::uint64_t d_ff) {
  OpCount layer = attention_ops(tokens, tokens, d_model, d_attn, heads);
  layer += adds(tokens * d_model);
  layer += dense_ops(tokens, d_model, d_ff) + dense_ops(tokens, d_ff, d_model);
  layer += adds(tokens * d_model);
  return {layer.mults * layers, layer.adds * layers};
}

OpCount decoder_stack_ops(std::uint64_t layers, std::uint64_t tokens, std::uint64_t memory,
                          std::uint64_t d_model, std::uint64_t d_attn, std::uint64_t heads,
                          std::uint64_t d_ff) {
  OpCount layer = attention_ops(tokens, tokens, d_model, d_attn, heads);
  layer += adds(tokens * d_model);
  layer += attention_ops(tokens, memory, d_model, d_attn, heads);
  layer += adds(tokens * d_model);
  layer += dense_ops(tokens, d_model, d_ff) + dense_ops(tokens, d_ff, d_model);
  layer += adds(tokens * d_model);
  return {layer.mults * layers, layer.adds * layers};
}

ComplexityReport estimate_complexity(const ArchConfig& a, const RecognizerConfig& r,
                                     std::size_t seq_len) {
  ComplexityReport rep;
  const std::uint64_t n = seq_len ? seq_len : a.seq_len();
  rep.seq_len = n;
  // token embedding: scale by sqrt(d) and add the positional code
  const OpCount embed = mults(n * a.d_model) + adds(n * a.d_model);
  rep.parts = {
      {"semantic_encoder",
       embed + encoder_stack_ops(a.n_layers, n, a.d_model, a.d_attn, a.n_heads, a.d_ff)},
      {"channel_encoder", dense_ops(n, a.d_model, a.n_ce)},
      {"channel_decoder",
       dense_ops(n, a.n_ce, a.n_cd) + dense_ops(n, a.n_cd, a.d_model) + adds(n * a.d_model)},
      {"semantic_decoder", embed +
                               decoder_stack_ops(a.n_layers, n, n, a.d_model, a.d_attn,
                                                 a.n_heads, a.d_ff) +
                               dense_ops(n, a.d_model, a.vocab_size)},
  };
  for (const auto& [_, c] : rep.parts) rep.encoder_decoder += c;

  const std::uint64_t l = r.slot_len;
  rep.recognizer = mults(l * r.d_model) + adds(l * r.d_model) +
                   encoder_stack_ops(r.n_layers, l, r.d_model, r.d_model, r.n_heads, r.d_ff) +
                   dense_ops(1, r.d_model, r.classes);
  rep.parts.emplace_back("recognizer", rep.recognizer);
  return rep;
}

OpCount measure_encoder_decoder_ops(const ArchConfig& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  const Transmitter tx(arch, store, rng);
  const Receiver rx(arch, store, 1, rng);
  const std::size_t n = arch.seq_len();
  std::uniform_int_distribution<std::int32_t> word(kNumReserved,
                                                   static_cast<std::int32_t>(arch.vocab_size) - 1);
  auto ids = std::make_shared<std::vector<std::int32_t>>(n);
  for (auto& id : *ids) id = word(rng);
  TokenBatch batch{1, ids, std::vector<std::uint8_t>(n, 1)};
  auto dec_in = std::make_shared<const std::vector<std::int32_t>>(shift_right(*ids, 1, n));

  kernels::begin_counting();
  const Tensor symbols = tx.transmit(batch);
  const Tensor memory = rx.channel_decode(symbols);
  const Tensor logits = rx.decode_teacher(memory, dec_in, 1, n);
  const auto c = kernels::end_counting();
  return {c.mults, c.adds};
}

OpCount measure_recognizer_ops(const RecognizerConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore store;
  const Recognizer rec(cfg, store, rng);
  std::uniform_int_distribution<std::int32_t> word(kNumReserved,
                                                   static_cast<std::int32_t>(cfg.vocab_size) - 1);
  auto ids = std::make_shared<std::vector<std::int32_t>>(cfg.slot_len);
  for (auto& id : *ids) id = word(rng);
  kernels::begin_counting();
  const Tensor logits = rec.logits(ids, std::vector<std::uint8_t>(cfg.slot_len, 1), 1);
  const auto c = kernels::end_counting();
  return {c.mults, c.adds};
}

}  // namespace mrsc::eval
