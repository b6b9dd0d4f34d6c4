#pragma once

// Transformer building blocks shared by the transceiver and the recognizer.
// Layers hold handles into a ParamStore, so optimiser updates on the store
// are seen by the layers directly.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mrsc/params.hpp"
#include "mrsc/tensor.hpp"

namespace mrsc {

struct Linear {
  Tensor w;
  Tensor b;

  static Linear create(ParamStore& store, const std::string& path, std::size_t in,
                       std::size_t out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return add_bias(matmul(x, w), b); }
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  static LayerNorm create(ParamStore& store, const std::string& path, std::size_t dim,
                          std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

// Scaled dot-product attention over `heads` heads. Q, K and V come from three
// separate projections to width `attn_dim`; the output projection maps back
// to the model width.
struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  static MultiHeadAttention create(ParamStore& store, const std::string& path,
                                   std::size_t model_dim, std::size_t attn_dim, std::size_t heads,
                                   std::mt19937_64& rng);

  // query_in [b, tq, d], kv_in [b, tk, d]; mask [b, tq, tk]. When `probs` is
  // given it receives the attention weights [b*heads, tq, tk].
  Tensor operator()(const Tensor& query_in, const Tensor& kv_in,
                    std::shared_ptr<const AttentionMask> mask, Tensor* probs = nullptr) const;
};

struct FeedForward {
  Linear in, out;

  static FeedForward create(ParamStore& store, const std::string& path, std::size_t dim,
                            std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const { return out(relu(in(x))); }
};

// Post-norm encoder layer: x = LN(x + SelfAttn(x)); x = LN(x + FF(x)).
struct EncoderLayer {
  MultiHeadAttention attn;
  LayerNorm norm1, norm2;
  FeedForward ff;

  static EncoderLayer create(ParamStore& store, const std::string& path, std::size_t dim,
                             std::size_t attn_dim, std::size_t heads, std::size_t ff_dim,
                             std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, std::shared_ptr<const AttentionMask> mask,
                    Tensor* probs = nullptr) const;
};

// Post-norm decoder layer with causal self-attention, encoder-decoder
// attention and a feed-forward block.
struct DecoderLayer {
  MultiHeadAttention self_attn, cross_attn;
  LayerNorm norm1, norm2, norm3;
  FeedForward ff;

  static DecoderLayer create(ParamStore& store, const std::string& path, std::size_t dim,
                             std::size_t attn_dim, std::size_t heads, std::size_t ff_dim,
                             std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const Tensor& memory,
                    std::shared_ptr<const AttentionMask> self_mask,
                    std::shared_ptr<const AttentionMask> cross_mask) const;
};

// Fixed sinusoidal encoding, [positions x dim] row-major.
std::vector<double> positional_encoding(std::size_t positions, std::size_t dim);

// Key-padding mask: query rows see every key whose valid flag is set.
std::shared_ptr<const AttentionMask> key_padding_mask(std::size_t batch, std::size_t rows,
                                                      std::size_t cols,
                                                      const std::vector<std::uint8_t>& key_valid);
std::shared_ptr<const AttentionMask> causal_mask(std::size_t batch, std::size_t len);
std::shared_ptr<const AttentionMask> full_mask(std::size_t batch, std::size_t rows,
                                               std::size_t cols);

// Token embedding scaled by sqrt(dim) plus the positional encoding.
Tensor embed_tokens(const Tensor& table, std::shared_ptr<const std::vector<std::int32_t>> ids,
                    std::size_t batch, std::size_t len);

}  // namespace mrsc
