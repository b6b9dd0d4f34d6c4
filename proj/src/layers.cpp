#include "mrsc/layers.hpp"

#include <cmath>

#include "mrsc/error.hpp"

namespace mrsc {

Linear Linear::create(ParamStore& store, const std::string& path, std::size_t in,
                      std::size_t out, std::mt19937_64& rng) {
  Linear l;
  l.w = store.get_or_create(path + "/w", {in, out}, Init::kXavier, rng);
  l.b = store.get_or_create(path + "/b", {out}, Init::kZeros, rng);
  return l;
}

LayerNorm LayerNorm::create(ParamStore& store, const std::string& path, std::size_t dim,
                            std::mt19937_64& rng) {
  LayerNorm n;
  n.gamma = store.get_or_create(path + "/gamma", {dim}, Init::kOnes, rng);
  n.beta = store.get_or_create(path + "/beta", {dim}, Init::kZeros, rng);
  return n;
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& path,
                                              std::size_t model_dim, std::size_t attn_dim,
                                              std::size_t heads, std::mt19937_64& rng) {
  require(heads > 0 && attn_dim % heads == 0, "attention width must divide into heads");
  MultiHeadAttention a;
  a.q = Linear::create(store, path + "/q", model_dim, attn_dim, rng);
  a.k = Linear::create(store, path + "/k", model_dim, attn_dim, rng);
  a.v = Linear::create(store, path + "/v", model_dim, attn_dim, rng);
  a.o = Linear::create(store, path + "/o", attn_dim, model_dim, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& query_in, const Tensor& kv_in,
                                      std::shared_ptr<const AttentionMask> mask,
                                      Tensor* probs) const {
  const Tensor qh = split_heads(q(query_in), heads);
  const Tensor kh = split_heads(k(kv_in), heads);
  const Tensor vh = split_heads(v(kv_in), heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(qh.dims()[2]));
  const Tensor scores = scale(bmm(qh, kh, /*transpose_b=*/true), inv_sqrt);
  Tensor p = masked_softmax(scores, std::move(mask), heads);
  if (probs) *probs = p;
  return o(merge_heads(bmm(p, vh), heads));
}

FeedForward FeedForward::create(ParamStore& store, const std::string& path, std::size_t dim,
                                std::size_t hidden, std::mt19937_64& rng) {
  return {Linear::create(store, path + "/in", dim, hidden, rng),
          Linear::create(store, path + "/out", hidden, dim, rng)};
}

EncoderLayer EncoderLayer::create(ParamStore& store, const std::string& path, std::size_t dim,
                                  std::size_t attn_dim, std::size_t heads, std::size_t ff_dim,
                                  std::mt19937_64& rng) {
  EncoderLayer l;
  l.attn = MultiHeadAttention::create(store, path + "/attn", dim, attn_dim, heads, rng);
  l.norm1 = LayerNorm::create(store, path + "/norm1", dim, rng);
  l.ff = FeedForward::create(store, path + "/ff", dim, ff_dim, rng);
  l.norm2 = LayerNorm::create(store, path + "/norm2", dim, rng);
  return l;
}

Tensor EncoderLayer::operator()(const Tensor& x, std::shared_ptr<const AttentionMask> mask,
                                Tensor* probs) const {
  const Tensor h = norm1(add(x, attn(x, x, std::move(mask), probs)));
  return norm2(add(h, ff(h)));
}

DecoderLayer DecoderLayer::create(ParamStore& store, const std::string& path, std::size_t dim,
                                  std::size_t attn_dim, std::size_t heads, std::size_t ff_dim,
                                  std::mt19937_64& rng) {
  DecoderLayer l;
  l.self_attn = MultiHeadAttention::create(store, path + "/self_attn", dim, attn_dim, heads, rng);
  l.norm1 = LayerNorm::create(store, path + "/norm1", dim, rng);
  l.cross_attn =
      MultiHeadAttention::create(store, path + "/cross_attn", dim, attn_dim, heads, rng);
  l.norm2 = LayerNorm::create(store, path + "/norm2", dim, rng);
  l.ff = FeedForward::create(store, path + "/ff", dim, ff_dim, rng);
  l.norm3 = LayerNorm::create(store, path + "/norm3", dim, rng);
  return l;
}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& memory,
                                std::shared_ptr<const AttentionMask> self_mask,
                                std::shared_ptr<const AttentionMask> cross_mask) const {
  const Tensor h1 = norm1(add(x, self_attn(x, x, std::move(self_mask))));
  const Tensor h2 = norm2(add(h1, cross_attn(h1, memory, std::move(cross_mask))));
  return norm3(add(h2, ff(h2)));
}

std::vector<double> positional_encoding(std::size_t positions, std::size_t dim) {
  std::vector<double> pe(positions * dim);
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
      const double angle = static_cast<double>(p) * rate;
      pe[p * dim + i] = i % 2 == 0 ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

std::shared_ptr<const AttentionMask> key_padding_mask(std::size_t batch, std::size_t rows,
                                                      std::size_t cols,
                                                      const std::vector<std::uint8_t>& key_valid) {
  require(key_valid.size() == batch * cols, "key_padding_mask: key flags size mismatch");
  auto m = std::make_shared<AttentionMask>();
  m->batch = batch;
  m->rows = rows;
  m->cols = cols;
  m->allowed.resize(batch * rows * cols);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m->allowed[(b * rows + r) * cols + c] = key_valid[b * cols + c] ? 1 : 0;
  return m;
}

std::shared_ptr<const AttentionMask> causal_mask(std::size_t batch, std::size_t len) {
  auto m = std::make_shared<AttentionMask>();
  m->batch = batch;
  m->rows = len;
  m->cols = len;
  m->allowed.resize(batch * len * len);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t r = 0; r < len; ++r)
      for (std::size_t c = 0; c < len; ++c) m->allowed[(b * len + r) * len + c] = c <= r ? 1 : 0;
  return m;
}

std::shared_ptr<const AttentionMask> full_mask(std::size_t batch, std::size_t rows,
                                               std::size_t cols) {
  auto m = std::make_shared<AttentionMask>();
  m->batch = batch;
  m->rows = rows;
  m->cols = cols;
  m->allowed.assign(batch * rows * cols, 1);
  return m;
}

Tensor embed_tokens(const Tensor& table, std::shared_ptr<const std::vector<std::int32_t>> ids,
                    std::size_t batch, std::size_t len) {
  const std::size_t dim = table.dims()[1];
  const auto pe_row = positional_encoding(len, dim);
  auto pe = std::make_shared<std::vector<double>>(batch * len * dim);
  for (std::size_t b = 0; b < batch; ++b)
    std::copy(pe_row.begin(), pe_row.end(),
              pe->begin() + static_cast<std::ptrdiff_t>(b * len * dim));
  const Tensor e = embedding(table, std::move(ids), {batch, len});
  return add_constant(scale(e, std::sqrt(static_cast<double>(dim))), std::move(pe));
}

}  // namespace mrsc
