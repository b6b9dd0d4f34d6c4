#include "mrsc/recognizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mrsc/error.hpp"
#include "mrsc/transceiver.hpp"

namespace mrsc {

Recognizer::Recognizer(const RecognizerConfig& cfg, ParamStore& store, std::mt19937_64& rng)
    : cfg_(cfg) {
  if (cfg.classes < 2) throw ConfigError("recognizer needs at least two classes");
  if (cfg.vocab_size <= static_cast<std::size_t>(kNumReserved))
    throw ConfigError("recognizer vocab_size not set");
  embedding_ = store.get_or_create("recognizer/embedding", {cfg.vocab_size, cfg.d_model},
                                   Init::kXavier, rng);
  for (std::size_t i = 0; i < cfg.n_layers; ++i)
    layers_.push_back(EncoderLayer::create(store, "recognizer/enc" + std::to_string(i),
                                           cfg.d_model, cfg.d_model, cfg.n_heads, cfg.d_ff, rng));
  head_ = Linear::create(store, "recognizer/head", cfg.d_model, cfg.classes, rng);
}

Tensor Recognizer::logits(std::shared_ptr<const std::vector<std::int32_t>> ids,
                          const std::vector<std::uint8_t>& pad_mask, std::size_t n) const {
  const std::size_t len = cfg_.slot_len;
  require(ids && ids->size() == n * len && pad_mask.size() == n * len,
          "recognizer: input does not match slot_len");
  Tensor x = embed_tokens(embedding_, std::move(ids), n, len);
  const auto mask = key_padding_mask(n, len, len, pad_mask);
  for (const auto& layer : layers_) x = layer(x, mask);
  auto pool_mask = std::make_shared<const std::vector<std::uint8_t>>(pad_mask);
  return head_(masked_mean_rows(x, pool_mask));
}

namespace {

struct Framed {
  std::shared_ptr<std::vector<std::int32_t>> ids = std::make_shared<std::vector<std::int32_t>>();
  std::vector<std::uint8_t> mask;
};

Framed frame_all(const std::vector<const Words*>& sentences, const Vocabulary& vocab,
                 std::size_t slot_len) {
  Framed f;
  for (const auto* s : sentences) {
    auto slot = frame_slot(*s, vocab, slot_len);
    f.ids->insert(f.ids->end(), slot.begin(), slot.end());
  }
  f.mask.resize(f.ids->size());
  for (std::size_t i = 0; i < f.mask.size(); ++i) f.mask[i] = (*f.ids)[i] != kPad;
  return f;
}

}  // namespace

std::vector<Prediction> Recognizer::classify(const std::vector<Words>& sentences,
                                             const Vocabulary& vocab) const {
  std::vector<Prediction> out(sentences.size());
  std::vector<const Words*> present;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) continue;
    // over-long decodes are cut to fit the classifier input
    present.push_back(&sentences[i]);
    where.push_back(i);
  }
  if (present.empty()) return out;
  std::vector<Words> clipped;
  clipped.reserve(present.size());
  for (auto*& p : present)
    if (p->size() + 2 > cfg_.slot_len) {
      clipped.emplace_back(p->begin(), p->begin() + static_cast<std::ptrdiff_t>(cfg_.slot_len - 2));
      p = &clipped.back();
    }
  const auto f = frame_all(present, vocab, cfg_.slot_len);
  const Tensor lg = logits(f.ids, f.mask, present.size());
  const auto data = lg.data();
  const std::size_t k = cfg_.classes;
  for (std::size_t i = 0; i < present.size(); ++i) {
    const auto row = data.subspan(i * k, k);
    const auto label = argmax_rows(row, k)[0];
    double se = 0.0;
    for (double v : row) se += std::exp(v - row[static_cast<std::size_t>(label)]);
    out[where[i]] = {label, 1.0 / se};
  }
  return out;
}

RecognizerHistory train_recognizer(const Corpus& corpus, const Vocabulary& vocab,
                                   const RecognizerConfig& cfg, ParamStore& store) {
  std::set<int> labels;
  for (const auto& s : corpus) labels.insert(s.label);
  if (labels.size() < 2) throw ConfigError("recognizer training needs at least two classes");
  if (cfg.batch_size == 0 || !(cfg.lr > 0.0)) throw ConfigError("recognizer: bad lr/batch size");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= cfg.classes)
      throw ConfigError("recognizer: label " + std::to_string(l) + " outside configured classes");

  std::mt19937_64 rng(cfg.seed);
  const Recognizer rec(cfg, store, rng);
  std::vector<std::string> frozen;
  for (const auto& [path, _] : store.entries())
    if (!path_has_prefix(path, "recognizer")) {
      const auto owner = path.substr(0, path.find('/'));
      if (std::find(frozen.begin(), frozen.end(), owner) == frozen.end()) frozen.push_back(owner);
    }

  RecognizerHistory h;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<const Words*> batch;
      auto targets = std::make_shared<std::vector<std::int32_t>>();
      for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(&corpus[order[start + i]].words);
        targets->push_back(corpus[order[start + i]].label);
      }
      const auto f = frame_all(batch, vocab, cfg.slot_len);
      Tensor loss = cross_entropy(rec.logits(f.ids, f.mask, n), targets,
                                  std::make_shared<const std::vector<std::uint8_t>>(n, 1));
      total += loss.item();
      ++steps;
      backward(loss);
      sgd_step(store, {cfg.lr, cfg.clip_norm}, frozen);
    }
    h.loss.push_back(total / static_cast<double>(std::max<std::size_t>(steps, 1)));
  }
  return h;
}

double recognizer_accuracy(const Recognizer& rec, const Corpus& corpus, const Vocabulary& vocab) {
  if (corpus.empty()) return 0.0;
  std::vector<Words> sentences;
  for (const auto& s : corpus) sentences.push_back(s.words);
  const auto preds = rec.classify(sentences, vocab);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) ok += preds[i].label == corpus[i].label;
  return static_cast<double>(ok) / static_cast<double>(corpus.size());
}

std::vector<Words> split_slots(std::span<const std::int32_t> row, std::size_t slot_len,
                               std::size_t users, const Vocabulary& vocab) {
  require(slot_len > 0 && row.size() % slot_len == 0,
          "split_slots: row of " + std::to_string(row.size()) + " ids is not a multiple of " +
              std::to_string(slot_len));
  require(row.size() == slot_len * users, "split_slots: row length differs from users*slot_len");
  std::vector<Words> out;
  for (std::size_t s = 0; s < users; ++s) out.push_back(detokenize(row.subspan(s * slot_len, slot_len), vocab));
  return out;
}

RoutedOutput route(const std::vector<Words>& sentences, const Recognizer& rec,
                   const Vocabulary& vocab, int user) {
  RoutedOutput out;
  out.user = user;
  out.predictions = rec.classify(sentences, vocab);
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (out.predictions[i].label == user) {
      out.delivered.push_back(sentences[i]);
      out.slots.push_back(i);
      out.confidence.push_back(out.predictions[i].confidence);
    }
  return out;
}

}  // namespace mrsc
