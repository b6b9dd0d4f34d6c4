#include <doctest.h>

#include <algorithm>
#include <random>

#include "mrsc/error.hpp"
#include "mrsc/training.hpp"
#include "mrsc/transceiver.hpp"

using namespace mrsc;

namespace {

struct Fixture {
  Corpus corpus = gen_corpus(2, 6, 3);
  Vocabulary vocab = build_vocab(corpus);
  ArchConfig arch;
  Fixture() {
    arch = ArchConfig::tiny();
    arch.d_model = 8;
    arch.d_attn = 8;
    arch.d_ff = 16;
    arch.n_layers = 1;
    arch.n_cd = 16;
    arch.vocab_size = vocab.size();
  }
};

}  // namespace

TEST_CASE("arch validation") {
  ArchConfig a = ArchConfig::tiny();
  CHECK_THROWS_AS(a.validate(), ConfigError);  // vocabulary not set
  a.vocab_size = 20;
  CHECK_NOTHROW(a.validate());
  a.n_ce = 15;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = ArchConfig::tiny();
  a.vocab_size = 20;
  a.d_attn = 31;
  CHECK_THROWS_AS(a.validate(), ConfigError);
  a = ArchConfig::tiny();
  a.vocab_size = 20;
  a.slot_len = 16;
  CHECK_THROWS_AS(a.validate(), ConfigError);
}

TEST_CASE("forward shapes through the link") {
  Fixture f;
  std::mt19937_64 rng(1);
  ParamStore store;
  const Transmitter tx(f.arch, store, rng);
  const Receiver rx(f.arch, store, 1, rng);
  const auto batches = make_batches(f.corpus, f.vocab, 2, {3, f.arch.slot_len, false}, 1);
  const auto tb = TokenBatch::from(batches[0]);
  std::vector<Tensor> attn;
  const Tensor m = tx.semantic_encode(tb, &attn);
  CHECK(m.dims() == Shape{3, 36, 8});
  CHECK(attn.size() == 1);
  const Tensor x = tx.channel_encode(m);
  CHECK(x.dims() == Shape{3, 36, 16});
  const Tensor mh = rx.channel_decode(x);
  CHECK(mh.dims() == Shape{3, 36, 8});
  auto dec_in = std::make_shared<const std::vector<std::int32_t>>(shift_right(*tb.ids, 3, 36));
  CHECK(rx.decode_teacher(mh, dec_in, 3, 36).dims() == Shape{3, 36, f.vocab.size()});
  ChannelConfig ch;
  const auto ids = run_link(tx, rx, tb, ch);
  CHECK(ids.size() == 3 * 36);
}

TEST_CASE("attention never looks at padded keys") {
  Fixture f;
  std::mt19937_64 rng(2);
  ParamStore store;
  const Transmitter tx(f.arch, store, rng);
  const auto batches = make_batches(f.corpus, f.vocab, 2, {2, f.arch.slot_len, false}, 1);
  const auto tb = TokenBatch::from(batches[0]);
  std::vector<Tensor> attn;
  tx.semantic_encode(tb, &attn);
  const auto p = attn[0].data();
  const std::size_t n = 36, heads = f.arch.n_heads;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          if (!tb.pad_mask[b * n + c]) CHECK(p[((b * heads + h) * n + r) * n + c] == 0.0);
}

TEST_CASE("greedy decoding fills the rest of a slot with PAD after END") {
  Fixture f;
  std::mt19937_64 rng(3);
  ParamStore store;
  const Transmitter tx(f.arch, store, rng);
  const Receiver rx(f.arch, store, 1, rng);
  // Bias the output layer so END always wins.
  store.at("delta_1/out/b").data()[kEnd] = 100.0;
  const auto batches = make_batches(f.corpus, f.vocab, 2, {2, f.arch.slot_len, false}, 1);
  const auto ids = rx.decode_greedy(rx.channel_decode(tx.transmit(TokenBatch::from(batches[0]))));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(ids[r * 36 + s * 18] == kEnd);
      for (std::size_t t = 1; t < 18; ++t) CHECK(ids[r * 36 + s * 18 + t] == kPad);
    }
}

TEST_CASE("shift_right and argmax helpers") {
  CHECK(shift_right({7, 8, 9, 4, 5, 6}, 2, 3) == std::vector<std::int32_t>{kStart, 7, 8, kStart, 4, 5});
  const std::vector<double> logits{1, 3, 3, 0, 5, 2};
  CHECK(argmax_rows(logits, 3) == std::vector<std::int32_t>{1, 1});
}

TEST_CASE("receivers of different users have separate parameters") {
  Fixture f;
  std::mt19937_64 rng(4);
  ParamStore store;
  Receiver(f.arch, store, 1, rng);
  Receiver(f.arch, store, 2, rng);
  CHECK(store.parameter_count("chi_1") == store.parameter_count("chi_2"));
  CHECK(store.parameter_count("delta_1") == store.parameter_count("delta_2"));
  CHECK(store.at("chi_1/dense1/w").data()[0] != store.at("chi_2/dense1/w").data()[0]);
}

TEST_CASE("transmit is channel_encode after semantic_encode") {
  Fixture f;
  std::mt19937_64 rng(5);
  ParamStore store;
  const Transmitter tx(f.arch, store, rng);
  const auto batches = make_batches(f.corpus, f.vocab, 2, {3, f.arch.slot_len, false}, 2);
  const auto tb = TokenBatch::from(batches[0]);
  const Tensor x = tx.transmit(tb);
  const Tensor y = tx.channel_encode(tx.semantic_encode(tb));
  const auto fused = x.data(), parts = y.data();
  CHECK(std::equal(fused.begin(), fused.end(), parts.begin(), parts.end()));
}

TEST_CASE("decoder outputs depend only on earlier inputs") {
  Fixture f;
  std::mt19937_64 rng(6);
  ParamStore store;
  const Transmitter tx(f.arch, store, rng);
  const Receiver rx(f.arch, store, 1, rng);
  const auto batches = make_batches(f.corpus, f.vocab, 2, {1, f.arch.slot_len, false}, 3);
  const auto tb = TokenBatch::from(batches[0]);
  const Tensor mem = rx.channel_decode(tx.transmit(tb));
  const std::size_t n = 36, v = f.vocab.size();
  auto input = shift_right(*tb.ids, 1, n);
  const auto base = rx.decode_teacher(mem, std::make_shared<const std::vector<std::int32_t>>(input), 1, n);
  for (std::size_t j : {5u, 20u, 35u}) {
    auto changed = input;
    changed[j] = changed[j] == 7 ? 8 : 7;
    const auto out =
        rx.decode_teacher(mem, std::make_shared<const std::vector<std::int32_t>>(changed), 1, n);
    const auto a = base.data(), b = out.data();
    CHECK(std::equal(a.begin(), a.begin() + j * v, b.begin()));
    CHECK_FALSE(std::equal(a.begin() + j * v, a.begin() + (j + 1) * v, b.begin() + j * v));
  }
}
