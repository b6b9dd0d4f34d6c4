#include <doctest.h>

#include <random>

#include "mrsc/recognizer.hpp"

using namespace mrsc;

namespace {

RecognizerConfig small_config(const Vocabulary& vocab) {
  RecognizerConfig c;
  c.d_model = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 32;
  c.vocab_size = vocab.size();
  c.epochs = 15;
  c.batch_size = 8;
  c.lr = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("split_slots cuts a decoded row at slot boundaries") {
  Vocabulary v;
  const auto a = v.add("good");
  const auto b = v.add("film");
  std::vector<std::int32_t> row(2 * 18, kPad);
  row[0] = kStart;
  row[1] = a;
  row[2] = b;
  row[3] = kEnd;
  row[18] = kStart;
  row[19] = b;
  row[20] = kEnd;
  row[21] = a;  // after END: ignored
  const auto s = split_slots(row, 18, 2, v);
  REQUIRE(s.size() == 2);
  CHECK(s[0] == Words{"good", "film"});
  CHECK(s[1] == Words{"film"});
}

TEST_CASE("training lowers the loss and the classifier beats chance") {
  const Corpus c = gen_corpus(2, 40, 11);
  const Vocabulary v = build_vocab(c);
  const auto cfg = small_config(v);
  ParamStore store;
  const auto h = train_recognizer(c, v, cfg, store);
  REQUIRE(h.loss.size() == cfg.epochs);
  CHECK(h.loss.back() < h.loss.front());
  std::mt19937_64 rng(0);
  const Recognizer rec(cfg, store, rng);
  CHECK(recognizer_accuracy(rec, c, v) > 0.8);
}

TEST_CASE("routing delivers only matching, non-empty sentences") {
  const Corpus c = gen_corpus(2, 40, 12);
  const Vocabulary v = build_vocab(c);
  const auto cfg = small_config(v);
  ParamStore store;
  train_recognizer(c, v, cfg, store);
  std::mt19937_64 rng(0);
  const Recognizer rec(cfg, store, rng);

  const std::vector<Words> sentences{c[0].words, Words{}, c[40].words};
  for (int user = 0; user < 2; ++user) {
    const auto out = route(sentences, rec, v, user);
    REQUIRE(out.predictions.size() == 3);
    CHECK(out.predictions[1].label == -1);
    CHECK(out.delivered.size() == out.slots.size());
    CHECK(out.delivered.size() == out.confidence.size());
    for (std::size_t i = 0; i < out.slots.size(); ++i) {
      CHECK(out.slots[i] != 1);
      CHECK(out.predictions[out.slots[i]].label == user);
      CHECK(out.delivered[i] == sentences[out.slots[i]]);
    }
  }
  const auto p = rec.classify(sentences, v);
  for (std::size_t i : {0u, 2u}) {
    CHECK(p[i].confidence >= 0.5);
    CHECK(p[i].confidence <= 1.0);
  }
}
