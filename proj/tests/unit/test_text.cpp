#include <doctest.h>

#include <filesystem>
#include <set>

#include "mrsc/error.hpp"
#include "mrsc/text.hpp"

using namespace mrsc;

TEST_CASE("generated corpus is deterministic, balanced and within length bounds") {
  const auto a = gen_corpus(3, 40, 5);
  const auto b = gen_corpus(3, 40, 5);
  REQUIRE(a.size() == 120);
  std::vector<int> counts(3, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].words == b[i].words);
    CHECK(a[i].words.size() >= kMinWords);
    CHECK(a[i].words.size() <= kMaxWords);
    ++counts[static_cast<std::size_t>(a[i].label)];
  }
  CHECK(counts == std::vector<int>{40, 40, 40});
  CHECK(gen_corpus(3, 40, 6)[0].words != a[0].words);
}

TEST_CASE("class count outside 2..7 is a config error") {
  CHECK_THROWS_AS(gen_corpus(1, 10, 1), ConfigError);
  CHECK_THROWS_AS(gen_corpus(8, 10, 1), ConfigError);
  CHECK(class_names(CorpusKind::kSentiment, 2).size() == 2);
  CHECK(class_names(CorpusKind::kTopic, 7).size() == 7);
}

TEST_CASE("vocabulary reserves framing ids and maps unknown words to UNK") {
  const Corpus c = {{{"b", "a", "c", "a"}, 0}, {{"d", "a", "b", "e"}, 1}};
  const auto v = build_vocab(c);
  CHECK(v.size() == kNumReserved + 5);
  CHECK(v.id("a") == kNumReserved);
  CHECK(v.id("e") == kNumReserved + 4);
  CHECK(v.id("zzz") == kUnk);
  CHECK(v.word(kStart) != v.word(kEnd));
  CHECK_THROWS(v.word(1000));
  CHECK_THROWS_AS(build_vocab({}), ConfigError);
}

TEST_CASE("tokenize lowercases and splits on whitespace") {
  CHECK(tokenize("  The Cat\tsat\n") == Words{"the", "cat", "sat"});
  CHECK(join({"a", "b"}) == "a b");
}

TEST_CASE("slot framing and detokenisation") {
  const Corpus c = {{{"x", "y", "z", "w"}, 0}};
  const auto v = build_vocab(c);
  const auto slot = frame_slot({"x", "y"}, v, 17);
  CHECK(slot.size() == 17);
  CHECK(slot[0] == kStart);
  CHECK(slot[3] == kEnd);
  CHECK(slot[4] == kPad);
  CHECK(detokenize(slot, v) == Words{"x", "y"});
  const auto sep = frame_slot({"x"}, v, 17, true);
  CHECK(sep[3] == kSep);
  CHECK_THROWS_AS(frame_slot(Words(16, "x"), v, 17), ContractViolation);
}

TEST_CASE("merged batches hold one sentence of every class per row") {
  const auto corpus = gen_corpus(3, 10, 2);
  const auto vocab = build_vocab(corpus);
  const auto batches = make_batches(corpus, vocab, 3, {4, 18, false}, 9);
  REQUIRE(batches.size() == 3);  // 10 rows cut into 4 + 4 + 2
  CHECK(batches.back().rows == 2);
  std::set<std::string> seen;
  for (const auto& b : batches) {
    CHECK(b.ids.size() == b.rows * 3 * 18);
    for (std::size_t r = 0; r < b.rows; ++r) {
      std::set<int> labels;
      for (std::size_t s = 0; s < 3; ++s) {
        labels.insert(b.labels[r * 3 + s]);
        const auto slot = std::span(b.ids).subspan(r * 54 + s * 18, 18);
        CHECK(detokenize(slot, vocab) == b.references[r * 3 + s]);
        for (std::size_t t = 0; t < 18; ++t) CHECK((b.pad_mask[r * 54 + s * 18 + t] != 0) == (slot[t] != kPad));
        seen.insert(join(b.references[r * 3 + s]));
      }
      CHECK(labels.size() == 3);
    }
  }
  CHECK(seen.size() == 30);
  CHECK_THROWS_AS(make_batches(corpus, vocab, 3, {11, 18, false}, 1), ContractViolation);
}

TEST_CASE("stratified split keeps class proportions") {
  const auto corpus = gen_corpus(2, 50, 3);
  const auto s = split_corpus(corpus, 0.2, 4);
  CHECK(s.test.size() == 20);
  CHECK(s.train.size() == 80);
  int pos = 0;
  for (const auto& x : s.test) pos += x.label == 0;
  CHECK(pos == 10);
  CHECK(count_classes(corpus) == 2);
}

TEST_CASE("corpus directory round trip keeps labels") {
  const auto dir = std::filesystem::temp_directory_path() / "mrsc_corpus_test";
  std::filesystem::remove_all(dir);
  const auto corpus = gen_corpus(3, 5, 1);
  write_corpus_dir(corpus, class_names(CorpusKind::kTopic, 3), dir);
  std::vector<std::string> order;
  const auto back = read_corpus_dir(dir, &order);
  CHECK(order.size() == 3);
  CHECK(back.size() == corpus.size());
  std::multiset<std::pair<int, std::string>> a, b;
  for (const auto& s : corpus) a.insert({s.label, join(s.words)});
  for (const auto& s : back) b.insert({s.label, join(s.words)});
  CHECK(a == b);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_corpus_dir(dir), ConfigError);
}
