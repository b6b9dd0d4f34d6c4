#pragma once

// Experiment wiring shared by the command-line tool and the tests: settings
// resolved from a config file, dataset construction, model files and the
// BLEU sweeps.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mrsc/baseline/pipeline.hpp"
#include "mrsc/eval/config.hpp"
#include "mrsc/eval/results.hpp"
#include "mrsc/recognizer.hpp"
#include "mrsc/training.hpp"
#include "mrsc/transceiver.hpp"

namespace mrsc::eval {

struct CorpusSettings {
  int classes = 2;
  std::size_t sentences_per_class = 250;
  std::uint64_t seed = 7;
  double test_fraction = 0.2;
  std::string kind = "auto";  // sentiment | topic | auto (sentiment for 2 classes)
  std::string dir;  // read one-file-per-class corpus from here instead of generating
};

struct TransferSettings {
  ChannelKind channel = ChannelKind::kRayleigh;
  std::size_t epochs = 0;  // 0: same as train.epochs
  bool copy_init = true;
};

struct SweepSettings {
  std::vector<double> snr_db{0, 3, 6, 9, 12, 15, 18};
  std::vector<double> users{2, 3, 4};
  double users_snr_db = 12.0;
  ChannelKind users_channel = ChannelKind::kRayleigh;
  std::size_t users_sentences_per_class = 0;  // 0: corpus.sentences_per_class
  ChannelKind rx1_channel = ChannelKind::kAwgn;
  ChannelKind rx2_channel = ChannelKind::kRayleigh;
  std::size_t max_rows = 0;  // cap on evaluated test rows, 0 = all
  bool route = true;         // false: take each user's slot by its true label
  std::uint64_t ber_bits = 100000;
};

struct BaselineSettings {
  std::size_t block_bits = 512;
  int iterations = 5;
  std::uint64_t interleaver_seed = 1;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  CorpusSettings corpus;
  ArchConfig arch = ArchConfig::full();
  TrainConfig train;
  TransferSettings transfer;
  RecognizerConfig recognizer;
  SweepSettings sweep;
  BaselineSettings baseline;
  std::size_t eval_batch = 16;

  // Rejects unknown keys.
  static ExperimentConfig from(const ConfigFile& file);
  // Sets the run seed, which feeds training, the recognizer and channel draws.
  void set_seed(std::uint64_t s);
  // Every setting as `key = value` strings, stored next to the results.
  std::map<std::string, std::string> to_map() const;
};

struct Dataset {
  Corpus train;
  Corpus test;
  Vocabulary vocab;
  std::vector<std::string> class_names;
  CorpusKind kind = CorpusKind::kSentiment;
};

// Generated (or read) corpus, stratified split and vocabulary.
Dataset make_dataset(const CorpusSettings& corpus);

// Arch with users and vocabulary filled in from the dataset.
ArchConfig resolve_arch(const ExperimentConfig& cfg, const Dataset& data);
RecognizerConfig resolve_recognizer(const ExperimentConfig& cfg, const Dataset& data);

// Phase 1 plus recognizer training into `store`.
struct TrainOutcome {
  TrainHistory history;
  RecognizerHistory recognizer;
  double recognizer_accuracy = 0.0;
};
TrainOutcome train_system(const ExperimentConfig& cfg, const Dataset& data, ParamStore& store,
                          std::ostream* log = nullptr);

// Model directory layout: model.mrsc (all parameters) and vocab.txt.
void save_model(const std::filesystem::path& dir, const ParamStore& store, const Vocabulary& vocab);
ParamStore load_model_params(const std::filesystem::path& dir);
Vocabulary load_vocab(const std::filesystem::path& file);
void save_vocab(const std::filesystem::path& file, const Vocabulary& vocab);

bool has_receiver(const ParamStore& store, int user);
bool has_recognizer(const ParamStore& store);

// Greedy decoding of test rows by one receiver, every slot then handed to the
// user of its predicted class (or, without a recognizer, to the user of its
// true class). Entry c of `per_class` scores the sentence delivered for class
// c against that row's class-c reference; no delivery scores 0.
struct SemanticEval {
  std::vector<BleuAccumulator> per_class;
  std::vector<std::size_t> correct_delivery;  // rows where class c got a class-c slot
  std::size_t rows = 0;
};
SemanticEval evaluate_semantic(ParamStore& store, const ArchConfig& arch, int receiver_user,
                               const Recognizer* recognizer, const Corpus& test,
                               const Vocabulary& vocab, const ChannelConfig& channel,
                               std::size_t batch_size, std::uint64_t seed,
                               std::size_t max_rows = 0);

// Same rows through the classical chain: user c sends the row's class-c
// sentence and is scored on its own despread stream.
std::vector<BleuAccumulator> evaluate_classical(const baseline::ClassicalLink& link,
                                                const Corpus& test, const Vocabulary& vocab,
                                                const ChannelConfig& channel,
                                                std::size_t slot_len, std::size_t batch_size,
                                                std::uint64_t seed, std::size_t max_rows = 0);

baseline::ClassicalLink make_classical_link(const ExperimentConfig& cfg, const Dataset& data,
                                            std::size_t users);

// BLEU versus SNR. Receiver r is evaluated under sweep.rx<r>_channel; the
// classical chain is scored for the same user under the same channel.
std::vector<SweepRow> run_snr_sweep(const ExperimentConfig& cfg, const Dataset& data,
                                    ParamStore* store, bool classical = true);

// Bit error rate of the classical chain over the SNR grid.
std::vector<baseline::BerPoint> run_ber_sweep(const ExperimentConfig& cfg, const Dataset& data,
                                              ChannelKind kind);
void write_ber_csv(const std::filesystem::path& file, ChannelKind kind,
                   const std::vector<baseline::BerPoint>& points);

// Average BLEU over all users for each K of sweep.users on the topic
// corpus. Models are cached under `model_root/K<k>` when the path is set.
std::vector<SweepRow> run_users_sweep(const ExperimentConfig& cfg,
                                      const std::filesystem::path& model_root,
                                      std::ostream* log = nullptr);

}  // namespace mrsc::eval
