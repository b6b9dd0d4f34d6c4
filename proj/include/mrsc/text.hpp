#pragma once

// Vocabulary, synthetic labelled corpora and merged multi-user batches.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mrsc {

using Words = std::vector<std::string>;

inline constexpr std::int32_t kPad = 0;
inline constexpr std::int32_t kStart = 1;
inline constexpr std::int32_t kEnd = 2;
inline constexpr std::int32_t kUnk = 3;
inline constexpr std::int32_t kSep = 4;
inline constexpr std::int32_t kNumReserved = 5;

inline constexpr std::size_t kMinWords = 4;
inline constexpr std::size_t kMaxWords = 15;

struct LabeledSentence {
  Words words;
  int label = 0;
};

using Corpus = std::vector<LabeledSentence>;

enum class CorpusKind { kSentiment, kTopic };

// Class names in label order.
std::vector<std::string> class_names(CorpusKind kind, int num_classes);

// Synthetic corpus: every class draws from its own template lexicon, so the
// label is recoverable from the words. K=2 defaults to sentiment, otherwise
// topics. Deterministic per seed.
Corpus gen_corpus(int num_classes, std::size_t sentences_per_class, std::uint64_t seed);
Corpus gen_corpus(CorpusKind kind, int num_classes, std::size_t sentences_per_class,
                  std::uint64_t seed);

// Lowercases and splits on whitespace.
Words tokenize(const std::string& text);
std::string join(const Words& words);

class Vocabulary {
 public:
  Vocabulary();

  std::int32_t id(const std::string& word) const;  // kUnk for unseen words
  const std::string& word(std::int32_t id) const;
  std::size_t size() const { return words_.size(); }
  bool contains(const std::string& word) const { return ids_.count(word) != 0; }

  std::vector<std::int32_t> encode(const Words& words) const;

  // Appends `word` if new and returns its id.
  std::int32_t add(const std::string& word);

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

// Every corpus word gets an id, assigned in sorted word order.
Vocabulary build_vocab(const Corpus& corpus);

// B rows of K slots of L ids each. Slot s of row b covers
// ids[b*K*L + s*L, +L): START, words, END, then PAD (optionally END, SEP).
struct MergedBatch {
  std::size_t rows = 0;
  std::size_t users = 0;
  std::size_t slot_len = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> pad_mask;  // 1 on real tokens, 0 on PAD
  std::vector<int> labels;             // rows x users, class of each slot
  std::vector<Words> references;       // rows x users, slot sentences

  std::size_t width() const { return users * slot_len; }
};

struct BatchOptions {
  std::size_t batch_size = 16;
  std::size_t slot_len = 18;
  bool insert_sep = false;
};

// Groups the corpus into rows holding one sentence per class in a seeded
// random slot order, then cuts rows into batches (the last may be short).
std::vector<MergedBatch> make_batches(const Corpus& corpus, const Vocabulary& vocab, int users,
                                      const BatchOptions& opts, std::uint64_t seed);

// Frames one sentence into a slot of `slot_len` ids.
std::vector<std::int32_t> frame_slot(const Words& words, const Vocabulary& vocab,
                                     std::size_t slot_len, bool insert_sep = false);

// Drops framing tokens and stops at the first END.
Words detokenize(std::span<const std::int32_t> ids, const Vocabulary& vocab);

// Splits the corpus per class, keeping `test_fraction` of each class aside.
struct CorpusSplit {
  Corpus train;
  Corpus test;
};
CorpusSplit split_corpus(const Corpus& corpus, double test_fraction, std::uint64_t seed);

int count_classes(const Corpus& corpus);

// One file per class, one sentence per line; class = file stem. Labels follow
// the sorted order of stems unless `class_order` names them.
Corpus read_corpus_dir(const std::filesystem::path& dir,
                       std::vector<std::string>* class_order = nullptr);
void write_corpus_dir(const Corpus& corpus, const std::vector<std::string>& names,
                      const std::filesystem::path& dir);

}  // namespace mrsc
