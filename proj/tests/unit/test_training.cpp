#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mrsc/error.hpp"
#include "mrsc/training.hpp"

using namespace mrsc;

namespace {

struct Setup {
  Corpus corpus = gen_corpus(2, 8, 5);
  Vocabulary vocab = build_vocab(corpus);
  ArchConfig arch;
  TrainConfig cfg;
  Setup() {
    arch = ArchConfig::tiny();
    arch.d_model = 8;
    arch.d_attn = 8;
    arch.d_ff = 16;
    arch.n_layers = 1;
    arch.n_cd = 16;
    arch.vocab_size = vocab.size();
    cfg.lr = 0.1;
    cfg.batch_size = 2;
    cfg.epochs = 3;
    cfg.clip_norm = 1.0;
  }
};

}  // namespace

TEST_CASE("phase 1 lowers the training loss") {
  Setup s;
  ParamStore store;
  const auto h = train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store);
  REQUIRE(h.loss.size() == 3);
  CHECK(h.loss.back() < h.initial_loss);
  CHECK(h.steps == 3 * 4);
  for (const char* p : {"alpha", "beta", "chi_1", "delta_1"}) CHECK(store.parameter_count(p) > 0);
}

TEST_CASE("identical seeds give identical parameters") {
  Setup s;
  s.cfg.epochs = 1;
  ParamStore a, b;
  train_phase1(s.corpus, s.vocab, s.arch, s.cfg, a);
  train_phase1(s.corpus, s.vocab, s.arch, s.cfg, b);
  CHECK(serialize_prefix(a, "") == serialize_prefix(b, ""));
}

TEST_CASE("transfer keeps the transmitter and receiver 1 bit-identical") {
  Setup s;
  s.cfg.epochs = 1;
  ParamStore store;
  train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store);
  const auto alpha = serialize_prefix(store, "alpha");
  const auto beta = serialize_prefix(store, "beta");
  const auto chi1 = serialize_prefix(store, "chi_1");
  TrainConfig t = s.cfg;
  t.epochs = 0;
  transfer_phase2(store, s.corpus, s.vocab, s.arch, t);
  // step 0: the new receiver is an exact copy
  CHECK(serialize_prefix(store, "chi_2").size() == chi1.size());
  CHECK(store.at("chi_2/dense1/w").data()[3] == store.at("chi_1/dense1/w").data()[3]);
  CHECK(store.at("delta_2/out/w").data()[5] == store.at("delta_1/out/w").data()[5]);

  t.epochs = 2;
  t.channel = ChannelKind::kRayleigh;
  const auto h = transfer_phase2(store, s.corpus, s.vocab, s.arch, t);
  CHECK(h.loss.size() == 2);
  CHECK(serialize_prefix(store, "alpha") == alpha);
  CHECK(serialize_prefix(store, "beta") == beta);
  CHECK(serialize_prefix(store, "chi_1") == chi1);
  CHECK(store.at("chi_2/dense1/w").data()[3] != store.at("chi_1/dense1/w").data()[3]);
}

TEST_CASE("transfer without copying starts from a fresh receiver") {
  Setup s;
  s.cfg.epochs = 1;
  ParamStore store;
  train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store);
  TrainConfig t = s.cfg;
  t.epochs = 0;
  transfer_phase2(store, s.corpus, s.vocab, s.arch, t, 1, 2, true);
  transfer_phase2(store, s.corpus, s.vocab, s.arch, t, 1, 2, false);
  CHECK(store.at("chi_2/dense1/w").data()[0] != store.at("chi_1/dense1/w").data()[0]);
}

TEST_CASE("transfer rejects a checkpoint of another architecture") {
  Setup s;
  s.cfg.epochs = 0;
  ParamStore store;
  train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store);
  ArchConfig other = s.arch;
  other.d_ff = 32;
  CHECK_THROWS_AS(transfer_phase2(store, s.corpus, s.vocab, other, s.cfg), ConfigError);
  ParamStore empty;
  CHECK_THROWS_AS(transfer_phase2(empty, s.corpus, s.vocab, s.arch, s.cfg), ConfigError);
}

TEST_CASE("epochs to threshold and early stopping") {
  Setup s;
  s.cfg.epochs = 4;
  s.cfg.loss_threshold = 100.0;  // met before training
  ParamStore store;
  auto h = train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store);
  CHECK(h.epochs_to_threshold == 0);
  s.cfg.loss_threshold = 1e-9;
  ParamStore store2;
  h = train_phase1(s.corpus, s.vocab, s.arch, s.cfg, store2);
  CHECK(h.epochs_to_threshold == -1);
}

TEST_CASE("bad training settings are config errors") {
  TrainConfig c;
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.snr_low_db = 10;
  c.snr_high_db = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("history CSV has one row per epoch plus the initial loss") {
  TrainHistory h;
  h.initial_loss = 2.0;
  h.loss = {1.0, 0.5};
  h.bleu = {std::nan(""), 0.75};
  const auto path = std::filesystem::temp_directory_path() / "mrsc_history_test.csv";
  write_history_csv(h, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,loss,bleu");
  std::getline(in, line);
  CHECK(line == "0,2,");
  std::getline(in, line);
  CHECK(line == "1,1,");
  std::getline(in, line);
  CHECK(line == "2,0.5,0.75");
  std::filesystem::remove(path);
}
