#include "mrsc/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "mrsc/error.hpp"
#include "mrsc/eval/bleu.hpp"

namespace mrsc {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (snr_low_db > snr_high_db) throw ConfigError("train SNR range has low > high");
}

Tensor cross_entropy_loss(const Tensor& logits, const std::vector<std::int32_t>& targets,
                          const std::vector<std::uint8_t>& pad_mask) {
  return cross_entropy(logits, std::make_shared<const std::vector<std::int32_t>>(targets),
                       std::make_shared<const std::vector<std::uint8_t>>(pad_mask));
}

Tensor through_channel(const Tensor& symbols, const ChannelConfig& cfg, ChannelOutput* info) {
  require(symbols.rank() == 3 && symbols.dims()[2] % 2 == 0,
          "through_channel: expects [rows, seq, even width]");
  const Tensor x = power_normalize(symbols);
  const std::size_t rows = x.dims()[0];
  const auto values = x.data();
  ComplexBlock block;
  block.rows = rows;
  block.symbols = x.size() / (2 * rows);
  block.iq.assign(values.begin(), values.end());
  ChannelOutput out = pass_channel(block, cfg);
  auto delta = std::make_shared<std::vector<double>>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) (*delta)[i] = out.y.iq[i] - values[i];
  if (info) *info = std::move(out);
  return add_constant(x, std::move(delta));
}

Tensor forward_loss(const Transmitter& tx, const Receiver& rx, const MergedBatch& batch,
                    const ChannelConfig& cfg) {
  const auto tokens = TokenBatch::from(batch);
  const Tensor received = through_channel(tx.transmit(tokens), cfg);
  const Tensor memory = rx.channel_decode(received);
  const std::size_t len = batch.width();
  auto dec_in = std::make_shared<const std::vector<std::int32_t>>(
      shift_right(batch.ids, batch.rows, len));
  const Tensor logits = rx.decode_teacher(memory, dec_in, batch.rows, len);
  return cross_entropy_loss(logits, batch.ids, batch.pad_mask);
}

std::vector<std::int32_t> run_link(const Transmitter& tx, const Receiver& rx,
                                   const TokenBatch& batch, const ChannelConfig& cfg) {
  const Tensor received = through_channel(tx.transmit(batch), cfg);
  return rx.decode_greedy(rx.channel_decode(received));
}

double evaluate_bleu(const Transmitter& tx, const Receiver& rx, const Corpus& corpus,
                     const Vocabulary& vocab, const ChannelConfig& cfg, std::size_t batch_size,
                     std::uint64_t seed, bool insert_sep) {
  const auto& arch = tx.arch();
  BatchOptions opts{batch_size, arch.slot_len, insert_sep};
  const auto batches = make_batches(corpus, vocab, static_cast<int>(arch.users), opts, seed);
  double total = 0.0;
  std::size_t n = 0;
  ChannelConfig c = cfg;
  for (const auto& b : batches) {
    const auto ids = run_link(tx, rx, TokenBatch::from(b), c);
    ++c.seed;
    for (std::size_t r = 0; r < b.rows; ++r)
      for (std::size_t s = 0; s < b.users; ++s) {
        const auto slot = std::span<const std::int32_t>(ids).subspan(
            r * b.width() + s * b.slot_len, b.slot_len);
        total += bleu(detokenize(slot, vocab), b.references[r * b.users + s]).bleu4();
        ++n;
      }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

namespace {

struct Schedule {
  const TrainConfig& cfg;
  std::mt19937_64 rng;

  explicit Schedule(const TrainConfig& c) : cfg(c), rng(c.seed ^ 0x9e3779b97f4a7c15ULL) {}

  ChannelConfig next_channel() {
    ChannelConfig ch;
    ch.kind = cfg.channel;
    ch.fading_group = cfg.fading_group;
    ch.snr_db = cfg.snr_low_db == cfg.snr_high_db
                    ? cfg.snr_low_db
                    : std::uniform_real_distribution<double>(cfg.snr_low_db, cfg.snr_high_db)(rng);
    ch.seed = rng();
    return ch;
  }
};

std::vector<std::string> frozen_except(const ParamStore& store,
                                       const std::vector<std::string>& trainable) {
  std::set<std::string> owners;
  for (const auto& [path, _] : store.entries()) owners.insert(path.substr(0, path.find('/')));
  std::vector<std::string> frozen;
  for (const auto& o : owners)
    if (std::find(trainable.begin(), trainable.end(), o) == trainable.end()) frozen.push_back(o);
  return frozen;
}

void note_threshold(TrainHistory& h, double loss, int epoch, double threshold) {
  if (h.epochs_to_threshold < 0 && loss <= threshold) h.epochs_to_threshold = epoch;
}

TrainHistory run_training(const Transmitter& tx, const Receiver& rx, ParamStore& store,
                          const std::vector<std::string>& trainable, const Corpus& corpus,
                          const Vocabulary& vocab, const TrainConfig& cfg,
                          const Corpus* validation) {
  cfg.validate();
  const auto& arch = tx.arch();
  const auto frozen = frozen_except(store, trainable);
  Schedule sched(cfg);
  const BatchOptions opts{cfg.batch_size, arch.slot_len, cfg.insert_sep};
  const int users = static_cast<int>(arch.users);
  TrainHistory h;

  {
    // loss of the untrained system over one pass, no updates
    const auto batches = make_batches(corpus, vocab, users, opts, cfg.seed);
    double total = 0.0;
    for (const auto& b : batches) total += forward_loss(tx, rx, b, sched.next_channel()).item();
    h.initial_loss = total / static_cast<double>(batches.size());
    note_threshold(h, h.initial_loss, 0, cfg.loss_threshold);
  }

  Corpus val;
  if (validation && cfg.validate_sentences > 0) {
    std::vector<std::size_t> taken(arch.users, 0);
    for (const auto& s : *validation)
      if (taken[static_cast<std::size_t>(s.label)]++ < cfg.validate_sentences) val.push_back(s);
  }

  const SgdOptions sgd{cfg.lr, cfg.clip_norm};
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.stop_at_threshold && h.epochs_to_threshold >= 0) break;
    const auto batches = make_batches(corpus, vocab, users, opts, cfg.seed + epoch);
    double total = 0.0;
    for (const auto& b : batches) {
      Tensor loss = forward_loss(tx, rx, b, sched.next_channel());
      const double v = loss.item();
      if (!std::isfinite(v))
        throw std::runtime_error("training diverged: loss " + std::to_string(v) + " at epoch " +
                                 std::to_string(epoch) + ", step " + std::to_string(h.steps));
      backward(loss);
      sgd_step(store, sgd, frozen);
      total += v;
      ++h.steps;
    }
    const double mean = total / static_cast<double>(batches.size());
    h.loss.push_back(mean);
    note_threshold(h, mean, static_cast<int>(epoch), cfg.loss_threshold);
    if (!val.empty()) {
      ChannelConfig ch{cfg.channel, cfg.validate_snr_db, cfg.seed + 7777 + epoch, cfg.fading_group};
      h.bleu.push_back(evaluate_bleu(tx, rx, val, vocab, ch, cfg.batch_size, cfg.seed, cfg.insert_sep));
    } else {
      h.bleu.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return h;
}

}  // namespace

TrainHistory train_phase1(const Corpus& corpus, const Vocabulary& vocab, const ArchConfig& arch,
                          const TrainConfig& cfg, ParamStore& store, const Corpus* validation) {
  std::mt19937_64 init_rng(cfg.seed);
  const Transmitter tx(arch, store, init_rng);
  const Receiver rx(arch, store, 1, init_rng);
  return run_training(tx, rx, store,
                      {"alpha", "beta", receiver_prefix_chi(1), receiver_prefix_delta(1)}, corpus,
                      vocab, cfg, validation);
}

TrainHistory transfer_phase2(ParamStore& store, const Corpus& corpus, const Vocabulary& vocab,
                             const ArchConfig& arch, const TrainConfig& cfg, int from_user,
                             int to_user, bool copy_init, const Corpus* validation) {
  if (from_user == to_user) throw ConfigError("transfer: source and target receiver coincide");
  std::mt19937_64 init_rng(cfg.seed);
  const auto chi_from = receiver_prefix_chi(from_user);
  const auto delta_from = receiver_prefix_delta(from_user);
  if (store.parameter_count("alpha") == 0 || store.parameter_count(chi_from) == 0)
    throw ConfigError("transfer: checkpoint lacks the pre-trained transmitter or receiver " +
                      std::to_string(from_user));
  try {
    // dims of every pre-trained tensor must agree with `arch`
    ParamStore probe;
    std::mt19937_64 probe_rng(0);
    Transmitter(arch, probe, probe_rng);
    Receiver(arch, probe, from_user, probe_rng);
    for (const auto& [path, t] : probe.entries()) {
      if (!store.contains(path)) throw ConfigError("transfer: checkpoint lacks " + path);
      if (store.at(path).dims() != t.dims())
        throw ConfigError("transfer: architecture mismatch at " + path);
    }
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("transfer: ") + e.what());
  }

  const auto chi_to = receiver_prefix_chi(to_user);
  const auto delta_to = receiver_prefix_delta(to_user);
  if (copy_init) {
    store.copy_prefix(chi_from, chi_to);
    store.copy_prefix(delta_from, delta_to);
  } else {
    // a previous receiver at this slot would otherwise be picked up as is
    store.erase_prefix(chi_to);
    store.erase_prefix(delta_to);
  }
  const Transmitter tx(arch, store, init_rng);
  const Receiver rx(arch, store, to_user, init_rng);
  return run_training(tx, rx, store, {chi_to, delta_to}, corpus, vocab, cfg, validation);
}

void write_history_csv(const TrainHistory& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,loss,bleu\n" << std::setprecision(17);
  out << 0 << ',' << h.initial_loss << ",\n";
  for (std::size_t e = 0; e < h.loss.size(); ++e) {
    out << e + 1 << ',' << h.loss[e] << ',';
    if (e < h.bleu.size() && !std::isnan(h.bleu[e])) out << h.bleu[e];
    out << '\n';
  }
}

}  // namespace mrsc
