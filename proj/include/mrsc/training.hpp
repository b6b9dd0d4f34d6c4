#pragma once

// Two-phase training: joint training of the transmitter with receiver 1,
// then transfer to a new receiver with the transmitter frozen.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mrsc/channel.hpp"
#include "mrsc/params.hpp"
#include "mrsc/text.hpp"
#include "mrsc/transceiver.hpp"

namespace mrsc {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 16;
  std::size_t epochs = 60;
  // Per-batch SNR drawn uniformly from [snr_low_db, snr_high_db]; equal
  // bounds give fixed-SNR training.
  double snr_low_db = 0.0;
  double snr_high_db = 18.0;
  ChannelKind channel = ChannelKind::kAwgn;
  std::size_t fading_group = 0;  // complex symbols per fading draw, 0 = one per row
  std::uint64_t seed = 1;
  double loss_threshold = 0.1;
  double clip_norm = 0.0;
  bool insert_sep = false;
  bool stop_at_threshold = false;
  // Sentences per class decoded after each epoch for the validation BLEU
  // column; 0 skips it (the column then holds NaN).
  std::size_t validate_sentences = 0;
  double validate_snr_db = 18.0;

  void validate() const;
};

struct TrainHistory {
  double initial_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> loss;  // mean training loss per epoch
  std::vector<double> bleu;  // validation BLEU-4 per epoch (NaN when skipped)
  // First epoch (1-based) whose mean loss is at or below the threshold; 0
  // when the initial loss already is, -1 when never reached.
  int epochs_to_threshold = -1;
  std::size_t steps = 0;
};

// Mean over non-PAD positions of -log p(target).
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<std::int32_t>& targets,
                          const std::vector<std::uint8_t>& pad_mask);

// Power-normalises the symbols, passes them through the channel and
// equalises. The channel perturbation enters the graph as a constant, so the
// gradient of the equalised output w.r.t. the input is the identity.
Tensor through_channel(const Tensor& symbols, const ChannelConfig& cfg,
                       ChannelOutput* info = nullptr);

// Full teacher-forced forward pass and loss for one merged batch.
Tensor forward_loss(const Transmitter& tx, const Receiver& rx, const MergedBatch& batch,
                    const ChannelConfig& cfg);

// Transmit, channel, channel-decode, greedy-decode. Returns rows x seq_len ids.
std::vector<std::int32_t> run_link(const Transmitter& tx, const Receiver& rx,
                                   const TokenBatch& batch, const ChannelConfig& cfg);

// Phase 1: trains alpha, beta, chi_1, delta_1 in `store` (created when
// absent) on the merged batches of `corpus`.
TrainHistory train_phase1(const Corpus& corpus, const Vocabulary& vocab, const ArchConfig& arch,
                          const TrainConfig& cfg, ParamStore& store,
                          const Corpus* validation = nullptr);

// Phase 2: loads receiver `to_user` from receiver `from_user` (or a fresh
// random init when `copy_init` is false) and trains only chi/delta of
// `to_user`; everything else in the store stays bit-identical.
TrainHistory transfer_phase2(ParamStore& store, const Corpus& corpus, const Vocabulary& vocab,
                             const ArchConfig& arch, const TrainConfig& cfg, int from_user = 1,
                             int to_user = 2, bool copy_init = true,
                             const Corpus* validation = nullptr);

// Mean greedy BLEU-4 over the slots of `corpus` at a fixed channel setting.
double evaluate_bleu(const Transmitter& tx, const Receiver& rx, const Corpus& corpus,
                     const Vocabulary& vocab, const ChannelConfig& cfg, std::size_t batch_size,
                     std::uint64_t seed, bool insert_sep = false);

void write_history_csv(const TrainHistory& h, const std::string& path);

}  // namespace mrsc
