#include "mrsc/transceiver.hpp"

#include "mrsc/error.hpp"

namespace mrsc {

void ArchConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("arch: " + m); };
  if (d_model == 0 || d_attn == 0 || d_ff == 0 || n_cd == 0) fail("widths must be positive");
  if (n_heads == 0 || d_attn % n_heads != 0) fail("d_attn must be divisible by n_heads");
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (n_ce == 0 || n_ce % 2 != 0) fail("n_ce must be even (pairs form complex symbols)");
  if (slot_len < kMaxWords + 2) fail("slot_len must be at least 17");
  if (users < 1 || users > 7) fail("users must be in [1,7]");
  if (vocab_size <= static_cast<std::size_t>(kNumReserved)) fail("vocab_size not set");
}

ArchConfig ArchConfig::full() { return ArchConfig{}; }

ArchConfig ArchConfig::tiny() {
  ArchConfig a;
  a.d_model = 32;
  a.d_attn = 32;
  a.n_layers = 2;
  a.n_heads = 2;
  a.d_ff = 64;
  return a;
}

bool operator==(const ArchConfig& a, const ArchConfig& b) {
  return a.d_model == b.d_model && a.n_layers == b.n_layers && a.n_heads == b.n_heads &&
         a.d_attn == b.d_attn && a.d_ff == b.d_ff && a.n_ce == b.n_ce && a.n_cd == b.n_cd &&
         a.slot_len == b.slot_len && a.users == b.users && a.vocab_size == b.vocab_size;
}

std::string receiver_prefix_chi(int user) { return "chi_" + std::to_string(user); }
std::string receiver_prefix_delta(int user) { return "delta_" + std::to_string(user); }

TokenBatch TokenBatch::from(const MergedBatch& b) {
  TokenBatch t;
  t.rows = b.rows;
  t.ids = std::make_shared<const std::vector<std::int32_t>>(b.ids);
  t.pad_mask = b.pad_mask;
  return t;
}

Transmitter::Transmitter(const ArchConfig& arch, ParamStore& store, std::mt19937_64& rng)
    : arch_(arch) {
  arch_.validate();
  embedding_ =
      store.get_or_create("alpha/embedding", {arch.vocab_size, arch.d_model}, Init::kXavier, rng);
  for (std::size_t i = 0; i < arch.n_layers; ++i)
    layers_.push_back(EncoderLayer::create(store, "alpha/enc" + std::to_string(i), arch.d_model,
                                           arch.d_attn, arch.n_heads, arch.d_ff, rng));
  channel_dense_ = Linear::create(store, "beta/dense", arch.d_model, arch.n_ce, rng);
}

Tensor Transmitter::semantic_encode(const TokenBatch& batch,
                                    std::vector<Tensor>* attention) const {
  const std::size_t len = arch_.seq_len();
  require(batch.ids && batch.ids->size() == batch.rows * len &&
              batch.pad_mask.size() == batch.rows * len,
          "semantic_encode: batch does not match seq_len " + std::to_string(len));
  Tensor x = embed_tokens(embedding_, batch.ids, batch.rows, len);
  const auto mask = key_padding_mask(batch.rows, len, len, batch.pad_mask);
  if (attention) attention->clear();
  for (const auto& layer : layers_) {
    Tensor probs;
    x = layer(x, mask, attention ? &probs : nullptr);
    if (attention) attention->push_back(probs);
  }
  return x;
}

Tensor Transmitter::channel_encode(const Tensor& semantic) const {
  require(semantic.rank() == 3 && semantic.dims()[2] == arch_.d_model,
          "channel_encode: expects [rows, seq, d_model]");
  return channel_dense_(semantic);
}

Tensor Transmitter::transmit(const TokenBatch& batch) const {
  return channel_encode(semantic_encode(batch));
}

Receiver::Receiver(const ArchConfig& arch, ParamStore& store, int user, std::mt19937_64& rng)
    : arch_(arch), user_(user) {
  arch_.validate();
  const auto chi = receiver_prefix_chi(user);
  const auto delta = receiver_prefix_delta(user);
  cd_hidden_ = Linear::create(store, chi + "/dense1", arch.n_ce, arch.n_cd, rng);
  cd_out_ = Linear::create(store, chi + "/dense2", arch.n_cd, arch.d_model, rng);
  embedding_ =
      store.get_or_create(delta + "/embedding", {arch.vocab_size, arch.d_model}, Init::kXavier, rng);
  for (std::size_t i = 0; i < arch.n_layers; ++i)
    layers_.push_back(DecoderLayer::create(store, delta + "/dec" + std::to_string(i), arch.d_model,
                                           arch.d_attn, arch.n_heads, arch.d_ff, rng));
  output_ = Linear::create(store, delta + "/out", arch.d_model, arch.vocab_size, rng);
}

Tensor Receiver::channel_decode(const Tensor& received) const {
  require(received.rank() == 3 && received.dims()[2] == arch_.n_ce,
          "channel_decode: expects [rows, seq, n_ce]");
  const Tensor m = cd_out_(relu(cd_hidden_(received)));
  // symbol timing is known at the receiver, so positions are re-attached here
  const std::size_t rows = m.dims()[0], len = m.dims()[1], dim = m.dims()[2];
  const auto pe_row = positional_encoding(len, dim);
  auto pe = std::make_shared<std::vector<double>>(rows * len * dim);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(pe_row.begin(), pe_row.end(), pe->begin() + static_cast<std::ptrdiff_t>(r * len * dim));
  return add_constant(m, std::move(pe));
}

Tensor Receiver::decode_teacher(const Tensor& memory,
                                std::shared_ptr<const std::vector<std::int32_t>> decoder_input,
                                std::size_t rows, std::size_t len) const {
  require(memory.rank() == 3 && memory.dims()[0] == rows && memory.dims()[2] == arch_.d_model,
          "decode_teacher: memory shape mismatch");
  require(decoder_input && decoder_input->size() == rows * len,
          "decode_teacher: decoder input size mismatch");
  const std::size_t mem_len = memory.dims()[1];
  Tensor x = embed_tokens(embedding_, std::move(decoder_input), rows, len);
  const auto self_mask = causal_mask(rows, len);
  const auto cross_mask = full_mask(rows, len, mem_len);
  for (const auto& layer : layers_) x = layer(x, memory, self_mask, cross_mask);
  return output_(x);
}

std::vector<std::int32_t> Receiver::decode_greedy(const Tensor& memory, std::size_t max_len) const {
  require(memory.rank() == 3, "decode_greedy: memory must be [rows, seq, d_model]");
  const std::size_t rows = memory.dims()[0];
  if (max_len == 0) max_len = arch_.seq_len();
  const std::size_t vocab = arch_.vocab_size;
  std::vector<std::vector<std::int32_t>> prefix(rows, std::vector<std::int32_t>{kStart});
  std::vector<std::int32_t> out(rows * max_len, kPad);
  // after END the rest of the slot is PAD, as in the framing
  const std::size_t slot = arch_.slot_len;
  std::vector<std::uint8_t> slot_done(rows, 0);
  for (std::size_t t = 0; t < max_len; ++t) {
    const std::size_t len = t + 1;
    auto input = std::make_shared<std::vector<std::int32_t>>();
    input->reserve(rows * len);
    for (const auto& p : prefix) input->insert(input->end(), p.begin(), p.end());
    const Tensor logits = decode_teacher(memory, std::move(input), rows, len);
    const auto data = logits.data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::int32_t next = kPad;
      if (!slot_done[r]) next = argmax_rows(data.subspan((r * len + t) * vocab, vocab), vocab)[0];
      out[r * max_len + t] = next;
      prefix[r].push_back(next);
      if (next == kEnd) slot_done[r] = 1;
      if ((t + 1) % slot == 0) slot_done[r] = 0;
    }
  }
  return out;
}

std::vector<std::int32_t> shift_right(const std::vector<std::int32_t>& targets, std::size_t rows,
                                      std::size_t len) {
  require(targets.size() == rows * len, "shift_right: size mismatch");
  std::vector<std::int32_t> in(rows * len);
  for (std::size_t r = 0; r < rows; ++r) {
    in[r * len] = kStart;
    for (std::size_t t = 1; t < len; ++t) in[r * len + t] = targets[r * len + t - 1];
  }
  return in;
}

std::vector<std::int32_t> argmax_rows(std::span<const double> logits, std::size_t width) {
  require(width > 0 && logits.size() % width == 0, "argmax_rows: bad width");
  std::vector<std::int32_t> out(logits.size() / width);
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < width; ++j)
      if (logits[r * width + j] > logits[r * width + best]) best = j;
    out[r] = static_cast<std::int32_t>(best);
  }
  return out;
}

}  // namespace mrsc
