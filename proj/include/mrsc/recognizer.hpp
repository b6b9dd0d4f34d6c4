#pragma once

// Receiver-side sentence classifier and routing of decoded slots to users.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mrsc/layers.hpp"
#include "mrsc/params.hpp"
#include "mrsc/text.hpp"

namespace mrsc {

struct RecognizerConfig {
  std::size_t d_model = 32;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 64;
  std::size_t slot_len = 18;
  std::size_t classes = 2;
  std::size_t vocab_size = 0;
  double lr = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double clip_norm = 0.0;
  std::uint64_t seed = 1;
};

struct Prediction {
  int label = -1;           // -1 for an empty sentence
  double confidence = 0.0;  // softmax maximum
};

// Embedding, post-norm encoder layers, masked mean-pool and a linear head,
// all under the "recognizer/" prefix.
class Recognizer {
 public:
  Recognizer(const RecognizerConfig& cfg, ParamStore& store, std::mt19937_64& rng);

  // ids: n x slot_len framed sentences; returns logits [n, classes].
  Tensor logits(std::shared_ptr<const std::vector<std::int32_t>> ids,
                const std::vector<std::uint8_t>& pad_mask, std::size_t n) const;

  std::vector<Prediction> classify(const std::vector<Words>& sentences,
                                   const Vocabulary& vocab) const;

  const RecognizerConfig& config() const { return cfg_; }

 private:
  RecognizerConfig cfg_;
  Tensor embedding_;
  std::vector<EncoderLayer> layers_;
  Linear head_;
};

struct RecognizerHistory {
  std::vector<double> loss;
};

// Trains the classifier on `corpus` with categorical cross-entropy.
RecognizerHistory train_recognizer(const Corpus& corpus, const Vocabulary& vocab,
                                   const RecognizerConfig& cfg, ParamStore& store);

double recognizer_accuracy(const Recognizer& rec, const Corpus& corpus, const Vocabulary& vocab);

// Cuts a decoded row of users*slot_len ids into per-slot sentences.
std::vector<Words> split_slots(std::span<const std::int32_t> row, std::size_t slot_len,
                               std::size_t users, const Vocabulary& vocab);

struct RoutedOutput {
  int user = 0;
  std::vector<Words> delivered;
  std::vector<std::size_t> slots;   // slot index of each delivered sentence
  std::vector<double> confidence;   // matching the delivered sentences
  std::vector<Prediction> predictions;  // one per input slot
};

// Classifies every sentence and delivers those whose class equals `user`.
// Empty sentences are never delivered. Zero or several matches are both
// valid outcomes.
RoutedOutput route(const std::vector<Words>& sentences, const Recognizer& rec,
                   const Vocabulary& vocab, int user);

}  // namespace mrsc
